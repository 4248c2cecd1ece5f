"""
Иерархия исключений расчетов фазовых границ.
Ошибки области определения наследуют ValueError, внутренние нарушения RuntimeError.
"""

from typing import Optional, Sequence


class PhaseBoundError(Exception):
    """Базовое исключение пакета"""


class DomainError(PhaseBoundError, ValueError):
    """Аргумент вне допустимой области"""


class UnboundedImprovementError(DomainError):
    """При η = 1 и бесплатных проходах неопределенность убывает без предела"""


class ConsistencyError(PhaseBoundError, RuntimeError):
    """Нарушен внутренний инвариант (например, отрицательная квантовая скобка)"""


class ConvergenceError(PhaseBoundError, RuntimeError):
    """Оптимизатор не сошелся; хранит лучшую найденную точку"""

    def __init__(
        self,
        message: str,
        best_weights: Optional[Sequence[float]] = None,
        best_delta_phi: float = float("inf"),
        iterations: int = 0,
    ) -> None:
        super().__init__(message)
        self.best_weights = None if best_weights is None else tuple(best_weights)
        self.best_delta_phi = best_delta_phi
        self.iterations = iterations


class UsageError(PhaseBoundError):
    """Неверное использование командной строки"""


class ReportIOError(PhaseBoundError, OSError):
    """Не удалось записать отчет"""
