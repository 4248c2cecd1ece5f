"""
Квантовая граница неопределенности фазы под потерями и ее минимизация по весам x_s.

Функционал F_Q(x) = Σ s² x_s − Σ_l N_l² / D_l, где
N_l = Σ_s x_s s B^s_l и D_l = Σ_s x_s B^s_l, вычисляется как сумма
неотрицательных слагаемых Σ_l Σ_t a_tl (t − r_l)² с a_tl = x_t B^t_l и r_l = N_l / D_l.
Отклонение t − r_l собирается как Σ_s a_sl (t − s) / D_l, поэтому ветвь
с единственным s дает точный ноль. Неопределенность δφ = ½ F_Q^{-1/2}.
"""

import logging
import math
import numbers
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config import Config
from exceptions import ConsistencyError, ConvergenceError, DomainError, UnboundedImprovementError
from models import QuantumOptimum, SolverReport, WeightVector
from services.analytic_bounds import xi_constant
from services.loss_kernel import loss_kernel_matrix
from utils import golden_section_maximize, golden_section_search, golden_section_steps

logger = logging.getLogger(__name__)

# Параметр условия Армихо
ARMIJO_C = 1e-4
# Предел шага в линейном поиске: ниже него подъем невозможен в плавающей точке
MIN_STEP = 1e-20
# Допустимое расхождение стартов в долях tol
MULTISTART_AGREEMENT = 10.0


def _validate_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"Пропускание η вне (0, 1]: {eta}")


def _validate_tol(tol: float) -> None:
    if not 1e-12 <= tol <= 1e-4:
        raise DomainError(f"Допуск вне [1e-12, 1e-4]: {tol}")


def _validate_passes(k: int) -> None:
    if not isinstance(k, numbers.Integral) or k < 1:
        raise DomainError(f"Число проходов должно быть целым ≥ 1: {k!r}")


def _eta_power(eta: float, k: float) -> float:
    """η^k через логарифм; 0.0 при исчезновении порядка"""
    return math.exp(k * math.log(eta))


def _branch_deviations(x: np.ndarray, kernel: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Веса a[t, l] = x_t B^t_l и отклонения t − r_l.

    Пустые ветви (D_l = 0) получают нулевое отклонение.
    """
    s = np.arange(x.size, dtype=float)
    weights = x[:, None] * kernel
    denominators = weights.sum(axis=0)
    live = denominators > 0.0
    offsets = s[:, None] - s[None, :]
    deviations = np.zeros_like(weights)
    deviations[:, live] = (offsets @ weights[:, live]) / denominators[live]
    return weights, deviations


def fisher_functional(x: np.ndarray, kernel: np.ndarray) -> float:
    """F_Q для произвольного неотрицательного вектора x (без нормировки)"""
    weights, deviations = _branch_deviations(x, kernel)
    return float(np.sum(weights * deviations**2))


def fisher_functional_gradient(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """∂F_Q/∂x_t = Σ_l B^t_l (t − r_l)²"""
    _, deviations = _branch_deviations(x, kernel)
    return np.sum(kernel * deviations**2, axis=1)


def _check_consistency(x: np.ndarray, kernel: np.ndarray, fisher: float) -> None:
    """Прямая форма Σ s² x − Σ N²/D не может быть отрицательной"""
    s = np.arange(x.size, dtype=float)
    denominators = x @ kernel
    numerators = (x * s) @ kernel
    live = denominators > 0.0
    second_moment = float(np.dot(s * s, x))
    direct = second_moment - float(np.sum(numerators[live] ** 2 / denominators[live]))
    scale = max(1.0, second_moment)
    if direct < -1e-10 * scale or abs(direct - fisher) > 1e-8 * scale:
        logger.error(f"Квантовая скобка несогласована: прямая {direct}, дисперсионная {fisher}")
        raise ConsistencyError(
            f"Отрицательная или несогласованная квантовая скобка: {direct} против {fisher}"
        )


def quantum_fisher(w: WeightVector, eta: float) -> float:
    """Скобка F_Q(x) для нормированного вектора весов"""
    _validate_eta(eta)
    kernel = loss_kernel_matrix(w.n, eta)
    fisher = fisher_functional(w.x, kernel)
    _check_consistency(w.x, kernel, fisher)
    return fisher


def quantum_fisher_gradient(w: WeightVector, eta: float) -> np.ndarray:
    _validate_eta(eta)
    return fisher_functional_gradient(w.x, loss_kernel_matrix(w.n, eta))


def _uncertainty_from_quantum_fisher(fisher: float) -> float:
    # Сумма неотрицательных слагаемых: ноль означает отсутствие информации о фазе
    if not fisher > 0.0:
        return math.inf
    return 0.5 / math.sqrt(fisher)


def quantum_uncertainty(w: WeightVector, eta: float) -> float:
    """δφ = ½ F_Q^{-1/2}; бесконечность, если состояние не несет информации о фазе"""
    return _uncertainty_from_quantum_fisher(quantum_fisher(w, eta))


def quantum_multipass_uncertainty(w: WeightVector, eta: float, k: int) -> float:
    """k проходов: δφ(x, η^k) / k"""
    _validate_eta(eta)
    _validate_passes(k)
    eta_k = _eta_power(eta, k)
    if eta_k == 0.0:
        logger.warning(f"η^k исчезает при η={eta}, k={k}")
        return math.inf
    return quantum_uncertainty(w, eta_k) / k


def project_to_simplex(y: np.ndarray) -> np.ndarray:
    """Евклидова проекция на симплекс {x ≥ 0, Σx = 1} через сортировку"""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        logger.error(f"❌ Нечисловой вектор на входе проекции: {y}")
        raise ConsistencyError("Проекция на симплекс получила inf или nan")
    u = np.sort(y)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, y.size + 1)
    rho = index[u - cumulative / index > 0.0][-1]
    theta = cumulative[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def noon_weights(n: int, eta: float) -> WeightVector:
    """Оптимальные веса на носителе {0, n}: x_n = 1/(1+η^{n/2})"""
    _validate_eta(eta)
    if n < 1:
        raise DomainError(f"Число фотонов должно быть ≥ 1: {n}")
    half = _eta_power(eta, 0.5 * n)
    return WeightVector.from_support(n, {0: half / (1.0 + half), n: 1.0 / (1.0 + half)})


def stretch_weights(w: WeightVector, k: int) -> WeightVector:
    """Переносит вес x_s в индекс ks: состояние из kn фотонов"""
    _validate_passes(k)
    stretched = np.zeros(k * w.n + 1)
    stretched[:: k] = w.x
    return WeightVector(stretched)


@dataclass
class _AscentResult:
    x: np.ndarray
    fisher: float
    iterations: int
    stationarity: float
    converged: bool


def _log_fisher(fisher: float) -> float:
    return math.log(fisher) if fisher > 0.0 else -math.inf


def _relative_spread(deltas: List[float]) -> float:
    """max δφ / min δφ − 1 по сошедшимся стартам"""
    lowest = min(deltas)
    if math.isinf(lowest):
        return 0.0
    return max(deltas) / lowest - 1.0


class QuantumWeightOptimizer:
    """
    Проекционный градиентный подъем ln F_Q на симплексе весов.

    ln F_Q вогнута вместе с F_Q, а ее градиент g / F_Q на оптимуме лежит в [0, 1]
    при любом порядке F_Q. Минимум δφ = ½ F_Q^{-1/2} достигается в той же точке:
    проекционные градиенты δφ и ln F_Q отличаются положительным множителем.

    Шаг Барзилаи-Борвейна с возвратом по условию Армихо. Кроме равномерного
    старта запускаются N00N-старт и случайные старты Дирихле; сошедшиеся
    старты должны совпасть по δφ с относительной точностью 10·tol.
    """

    def __init__(
        self,
        tol: Optional[float] = None,
        max_iterations: Optional[int] = None,
        extra_starts: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> None:
        self.tol = Config.OPTIMIZER_TOL if tol is None else tol
        self.max_iterations = (
            Config.OPTIMIZER_MAX_ITERATIONS if max_iterations is None else max_iterations
        )
        self.extra_starts = Config.OPTIMIZER_EXTRA_STARTS if extra_starts is None else extra_starts
        self.seed = Config.OPTIMIZER_SEED if seed is None else seed
        _validate_tol(self.tol)
        if self.max_iterations < 1:
            raise DomainError(f"Лимит итераций должен быть положительным: {self.max_iterations}")

    def _starts(self, n: int, eta: float) -> List[np.ndarray]:
        starts = [np.full(n + 1, 1.0 / (n + 1))]
        if self.extra_starts >= 1:
            starts.append(noon_weights(n, eta).x.copy())
        rng = np.random.default_rng(self.seed)
        for _ in range(max(0, self.extra_starts - 1)):
            starts.append(rng.dirichlet(np.ones(n + 1)))
        return starts

    @staticmethod
    def _stationarity(x: np.ndarray, direction: np.ndarray) -> float:
        if not np.all(np.isfinite(direction)):
            return math.inf
        return float(np.linalg.norm(x - project_to_simplex(x + direction)))

    def _ascend(self, x0: np.ndarray, kernel: np.ndarray) -> _AscentResult:
        x = project_to_simplex(x0)
        fisher = fisher_functional(x, kernel)
        if not fisher > 0.0:
            # Старт без информации о фазе: смещаем к равномерному вектору
            x = 0.5 * (x + 1.0 / x.size)
            fisher = fisher_functional(x, kernel)
        if not fisher > 0.0:
            return _AscentResult(x, fisher, 0, math.inf, False)

        level = math.log(fisher)
        direction = fisher_functional_gradient(x, kernel) / fisher
        step = 1.0

        for iteration in range(1, self.max_iterations + 1):
            stationarity = self._stationarity(x, direction)
            if stationarity < self.tol:
                return _AscentResult(x, fisher, iteration, stationarity, True)
            if math.isinf(stationarity):
                logger.warning(f"⚠️ Градиент ln F_Q вне диапазона чисел при F_Q={fisher:.3e}")
                return _AscentResult(x, fisher, iteration, stationarity, False)

            trial_step = step
            while True:
                candidate = project_to_simplex(x + trial_step * direction)
                candidate_fisher = fisher_functional(candidate, kernel)
                gain = float(np.dot(direction, candidate - x))
                if _log_fisher(candidate_fisher) >= level + ARMIJO_C * gain:
                    break
                trial_step *= 0.5
                if trial_step < MIN_STEP:
                    # Подъем невозможен в плавающей точке: текущая точка оптимальна
                    logger.debug(f"Линейный поиск исчерпан на итерации {iteration}")
                    return _AscentResult(x, fisher, iteration, stationarity, True)

            new_direction = fisher_functional_gradient(candidate, kernel) / candidate_fisher
            s = candidate - x
            y = new_direction - direction
            curvature = float(np.dot(s, y))
            if curvature < 0.0:
                step = min(max(float(np.dot(s, s)) / -curvature, 1e-12), 1e12)
            else:
                step = min(2.0 * trial_step, 1e12)

            x, fisher, direction = candidate, candidate_fisher, new_direction
            level = math.log(fisher)

        stationarity = self._stationarity(x, direction)
        return _AscentResult(x, fisher, self.max_iterations, stationarity, stationarity < self.tol)

    def optimize(self, n: int, eta: float) -> QuantumOptimum:
        """Оптимальные веса для n фотонов при пропускании η"""
        if not isinstance(n, numbers.Integral) or n < 1:
            raise DomainError(f"Число фотонов должно быть целым ≥ 1: {n!r}")
        _validate_eta(eta)

        kernel = loss_kernel_matrix(n, eta)
        results = [self._ascend(start, kernel) for start in self._starts(n, eta)]
        converged = [result for result in results if result.converged]

        if not converged:
            best = max(results, key=lambda result: result.fisher)
            logger.error(f"❌ Оптимизатор не сошелся: n={n}, η={eta}")
            raise ConvergenceError(
                f"Нет сходимости за {self.max_iterations} итераций (n={n}, η={eta})",
                best_weights=best.x,
                best_delta_phi=_uncertainty_from_quantum_fisher(best.fisher),
                iterations=best.iterations,
            )
        if len(converged) < len(results):
            logger.warning(
                f"⚠️ Сошлись {len(converged)} из {len(results)} стартов (n={n}, η={eta})"
            )

        deltas = [_uncertainty_from_quantum_fisher(result.fisher) for result in converged]
        best = converged[int(np.argmin(deltas))]
        spread = _relative_spread(deltas)
        if spread > MULTISTART_AGREEMENT * self.tol:
            logger.error(f"❌ Старты оптимизатора расходятся на {spread:.3e} (n={n}, η={eta})")
            raise ConsistencyError(
                f"Старты оптимизатора не согласованы: разброс δφ {spread:.3e} "
                f"при допуске {MULTISTART_AGREEMENT * self.tol:.1e} (n={n}, η={eta})"
            )

        weights = WeightVector(best.x)
        delta_phi = quantum_uncertainty(weights, eta)
        report = SolverReport(
            iterations=sum(result.iterations for result in results),
            gradient_norm=best.stationarity,
            starts=len(results),
            multistart_spread=spread,
            converged=True,
        )
        logger.debug(f"Квантовый оптимум n={n}, η={eta}: δφ={delta_phi!r}")
        return QuantumOptimum(n=n, k=1, eta=eta, weights=weights, delta_phi=delta_phi, solver_report=report)


def optimize_weights(n: int, eta: float, tol: Optional[float] = None) -> QuantumOptimum:
    """Минимум δφ по симплексу весов для n фотонов"""
    return QuantumWeightOptimizer(tol=tol).optimize(n, eta)


def noon_restricted_optimum(n: int, eta: float) -> QuantumOptimum:
    """Оптимум на носителе {0, n}: одномерная задача, золотое сечение по x_n"""
    if not isinstance(n, numbers.Integral) or n < 1:
        raise DomainError(f"Число фотонов должно быть целым ≥ 1: {n!r}")
    _validate_eta(eta)
    kernel = loss_kernel_matrix(n, eta)

    def fisher_at(x_n: float) -> float:
        x = np.zeros(n + 1)
        x[0], x[n] = 1.0 - x_n, x_n
        return fisher_functional(x, kernel)

    x_n, _ = golden_section_maximize(fisher_at, 0.0, 1.0, tol=Config.GOLDEN_TOL)
    weights = WeightVector.from_support(n, {0: 1.0 - x_n, n: x_n})
    report = SolverReport(
        iterations=golden_section_steps(1.0, Config.GOLDEN_TOL), gradient_norm=0.0, starts=1
    )
    return QuantumOptimum(
        n=n,
        k=1,
        eta=eta,
        weights=weights,
        delta_phi=quantum_uncertainty(weights, eta),
        solver_report=report,
    )


def default_pass_limit(eta: float) -> int:
    """ceil(4(1+ξ)/|ln η|): вдвое больше классически оптимального числа проходов"""
    return max(1, math.ceil(4.0 * (1.0 + xi_constant()) / abs(math.log(eta))))


def optimize_multipass(
    n: int,
    eta: float,
    k_max: Optional[int] = None,
    tol: Optional[float] = None,
    relaxed_k: bool = False,
) -> QuantumOptimum:
    """
    Оптимум по весам и целому числу проходов k ∈ [1, k_max].

    δφ не выпукла по k, поэтому k перебирается полностью; при равенстве
    выбирается меньшее k. При relaxed_k дополнительно оценивается
    оптимум по вещественному k (только диагностика).
    """
    _validate_eta(eta)
    if k_max is None:
        if eta == 1.0:
            raise UnboundedImprovementError(
                "При η = 1 неопределенность убывает с k без предела; задайте k_max"
            )
        k_max = default_pass_limit(eta)
    _validate_passes(k_max)

    optimizer = QuantumWeightOptimizer(tol=tol)
    best: Optional[QuantumOptimum] = None
    best_delta = math.inf
    total_iterations = 0

    for k in range(1, k_max + 1):
        eta_k = _eta_power(eta, k)
        if eta_k == 0.0:
            logger.debug(f"η^k исчезает начиная с k={k}, перебор остановлен")
            break
        candidate = optimizer.optimize(n, eta_k)
        total_iterations += candidate.solver_report.iterations
        delta = candidate.delta_phi / k
        if delta < best_delta:
            best_delta = delta
            best = QuantumOptimum(
                n=n,
                k=k,
                eta=eta,
                weights=candidate.weights,
                delta_phi=quantum_multipass_uncertainty(candidate.weights, eta, k),
                solver_report=candidate.solver_report,
            )

    if best is None:
        raise DomainError(f"Ни одно k из [1, {k_max}] не дает конечной неопределенности")

    k_relaxed = None
    if relaxed_k and k_max > 1:

        def relaxed_delta(k: float) -> float:
            return optimizer.optimize(n, _eta_power(eta, k)).delta_phi / k

        k_relaxed, _ = golden_section_search(relaxed_delta, 1.0, float(k_max), tol=1e-3)

    report = SolverReport(
        iterations=total_iterations,
        gradient_norm=best.solver_report.gradient_norm,
        starts=best.solver_report.starts,
        multistart_spread=best.solver_report.multistart_spread,
    )
    logger.info(f"📈 Многопроходный квантовый оптимум n={n}, η={eta}: k={best.k}, δφ={best.delta_phi:.6g}")
    return QuantumOptimum(
        n=n,
        k=best.k,
        eta=eta,
        weights=best.weights,
        delta_phi=best.delta_phi,
        solver_report=report,
        k_relaxed=k_relaxed,
    )
