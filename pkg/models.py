import math
import numbers
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from config import Config
from exceptions import DomainError

TWO_PI = 2.0 * math.pi


class ExitCode(IntEnum):
    """Коды завершения командной строки"""

    SUCCESS = 0
    USAGE = 1
    VERIFICATION_FAILED = 2
    IO_ERROR = 3


class Strategy(str, Enum):
    """Метки стратегий в строках кривых"""

    SIL = "SIL"
    MAXVIS = "MAXVIS"
    HL = "HL"
    NOON = "NOON"
    CHOP = "CHOP"
    MP_RESOURCE = "MP-resource"
    MP_FREE = "MP-free"
    Q = "Q"
    QMP = "QMP"
    # Опорная линия дробового шума 1/√n
    SN = "SN"


class ChopRegimeKind(str, Enum):
    """Режимы кусочно-оптимального k при нарезке N00N-состояний"""

    K_EQUALS_1 = "k-equals-1"
    INTERIOR = "interior"
    K_EQUALS_N = "k-equals-n"


def normalize_phase(phi: float) -> float:
    """Приводит фазу к диапазону [0, 2π)"""
    reduced = math.fmod(phi, TWO_PI)
    if reduced < 0:
        reduced += TWO_PI
    # fmod отрицательного числа может дать ровно 2π после сложения
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


@dataclass(frozen=True)
class InterferometerParams:
    """Конфигурация классического эксперимента: T, η, φ и средний бюджет фотонов"""

    transmission: float
    eta: float
    phi: float
    photon_budget: float

    def __post_init__(self) -> None:
        for name in ("transmission", "eta", "phi", "photon_budget"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise DomainError(f"Параметр {name} должен быть конечным числом: {value!r}")

        if not 0.0 <= self.transmission <= 1.0:
            raise DomainError(f"Пропускание T вне [0, 1]: {self.transmission}")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"Пропускание потерь η вне (0, 1]: {self.eta}")
        if not self.photon_budget > 0.0:
            raise DomainError(f"Бюджет фотонов должен быть положительным: {self.photon_budget}")

        object.__setattr__(self, "transmission", float(self.transmission))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "photon_budget", float(self.photon_budget))
        object.__setattr__(self, "phi", normalize_phase(float(self.phi)))


@dataclass(frozen=True, eq=False)
class WeightVector:
    """
    Распределение фотонов x_0..x_n входного квантового состояния.
    Конструктор нормирует сумму к единице и отклоняет нулевой вектор.
    """

    x: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.x, dtype=float).ravel()
        if arr.size < 2:
            raise DomainError(f"Нужно минимум два веса (n ≥ 1), получено {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Веса должны быть конечными числами")
        if np.any(arr < 0.0):
            raise DomainError(f"Отрицательный вес: {arr.min()}")

        total = math.fsum(arr)
        if total <= 0.0:
            raise DomainError("Все веса равны нулю")

        arr = arr / total
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)

    @property
    def n(self) -> int:
        """Число фотонов"""
        return int(self.x.size - 1)

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.ones(n + 1))

    @classmethod
    def from_support(cls, n: int, weights: Mapping[int, float]) -> "WeightVector":
        """Строит вектор по словарю {s: x_s}, остальные веса нулевые"""
        arr = np.zeros(n + 1)
        for s, value in weights.items():
            if not 0 <= s <= n:
                raise DomainError(f"Индекс {s} вне [0, {n}]")
            arr[s] = value
        return cls(arr)

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in self.x)


@dataclass(frozen=True, eq=False)
class LossKernelRow:
    """Биномиальные вероятности B^s_l(η) потери l фотонов из s"""

    s: int
    eta: float
    probabilities: np.ndarray


@dataclass(frozen=True)
class OutputMeans:
    """Средние отсчеты детекторов, амплитуда A и видность v"""

    mean_n1: float
    mean_n2: float
    amplitude: float
    visibility: float


@dataclass(frozen=True)
class StrategyPoint:
    """Одна строка кривой сравнения стратегий"""

    strategy: Strategy
    n: float
    k: float
    delta_phi: float
    aux: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.n > 0:
            raise DomainError(f"Ресурс n должен быть положительным: {self.n}")
        if not self.k >= 1:
            raise DomainError(f"Число проходов k должно быть ≥ 1: {self.k}")
        if math.isnan(self.delta_phi) or self.delta_phi <= 0:
            raise DomainError(f"Неопределенность должна быть положительной: {self.delta_phi}")
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "aux", dict(sorted(self.aux.items())))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.delta_phi)

    @property
    def is_saturated(self) -> bool:
        """Конечное, но астрономически большое значение"""
        return not self.is_infinite and self.delta_phi > Config.SATURATION_LIMIT

    @property
    def phi(self) -> float:
        """Фаза строки фазовой кривой (0 для кривых по n)"""
        return self.aux.get("phi", 0.0)


@dataclass(frozen=True)
class ChopRegime:
    """Результат оптимизации k при нарезке N00N-состояний"""

    regime: ChopRegimeKind
    eta0: float
    k_opt: float
    delta_phi: float


@dataclass(frozen=True)
class MultipassOptimum:
    """Оптимум классической многопроходной стратегии с бесплатными проходами"""

    xi: float
    k_opt: float
    delta_phi: float


@dataclass(frozen=True)
class SolverReport:
    """Сводка работы оптимизатора весов"""

    iterations: int
    gradient_norm: float
    starts: int
    multistart_spread: float = 0.0
    converged: bool = True


@dataclass(frozen=True, eq=False)
class QuantumOptimum:
    """Оптимальное квантовое состояние для (n, η, k)"""

    n: int
    k: int
    eta: float
    weights: WeightVector
    delta_phi: float
    solver_report: SolverReport
    # Диагностика: оптимум при вещественном k (только для многопроходного режима)
    k_relaxed: Optional[float] = None


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Смоделированные пары отсчетов (n₁, n₂) и метаданные зерна"""

    params: InterferometerParams
    passes: int
    trials: int
    seed: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.samples.shape != (self.trials, 2):
            raise DomainError(
                f"Ожидалась форма ({self.trials}, 2), получено {self.samples.shape}"
            )


@dataclass(frozen=True)
class PhaseEstimate:
    """Оценка фазы одного испытания"""

    phi_hat: float
    at_edge: bool


@dataclass(frozen=True)
class CrbReport:
    """Сравнение эмпирической RMSE с границей Крамера-Рао"""

    rmse: float
    crb: float
    ratio: float
    trials: int
    discarded: int
    bias: float
    reliable: bool


@dataclass
class CurveTable:
    """Таблица кривой: метаданные и упорядоченные строки"""

    metadata: Dict[str, Any]
    rows: List[StrategyPoint] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rows = sorted(self.rows, key=self.row_key)
        seen = set()
        for row in self.rows:
            key = self.row_key(row)
            if key in seen:
                raise DomainError(f"Повторная строка кривой: {key}")
            seen.add(key)

    @staticmethod
    def row_key(row: StrategyPoint) -> Tuple[str, float, float]:
        return (row.strategy.value, float(row.n), row.phi)

    def select(self, strategy: Strategy) -> List[StrategyPoint]:
        return [row for row in self.rows if row.strategy == strategy]

    def find(self, strategy: Strategy, n: float) -> Optional[StrategyPoint]:
        for row in self.rows:
            if row.strategy == strategy and row.n == n:
                return row
        return None
