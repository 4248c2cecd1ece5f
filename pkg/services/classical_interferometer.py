import logging
import math
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import gammainc

from config import Config
from exceptions import ConsistencyError, DomainError
from models import InterferometerParams, OutputMeans
from utils import golden_section_maximize

logger = logging.getLogger(__name__)

# Видность, отличающаяся от 1 меньше чем на это значение, считается полной
VISIBILITY_SNAP = 1e-12


class PhaseStrategy(str, Enum):
    """Выбор пропускания входного делителя"""

    OPTIMAL_T = "optimal-T"
    MAX_VISIBILITY = "max-visibility"


def _validate_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"Пропускание η вне (0, 1]: {eta}")


def _validate_budget(nbar: float) -> None:
    if not nbar > 0.0:
        raise DomainError(f"Бюджет фотонов должен быть положительным: {nbar}")


def amplitude_visibility(transmission: float, eta: float) -> Tuple[float, float]:
    """Амплитуда A и видность v интерференционных полос"""
    denominator = 1.0 - transmission * (1.0 - eta)
    amplitude = denominator / 2.0
    visibility = 2.0 * math.sqrt(transmission * (1.0 - transmission) * eta) / denominator
    if visibility >= 1.0 - VISIBILITY_SNAP:
        visibility = 1.0
    return amplitude, visibility


def output_means(p: InterferometerParams) -> OutputMeans:
    """Средние отсчеты двух детекторов"""
    amplitude, visibility = amplitude_visibility(p.transmission, p.eta)
    fringe = visibility * math.cos(p.phi)
    scale = amplitude * p.photon_budget
    return OutputMeans(
        mean_n1=scale * (1.0 - fringe),
        mean_n2=scale * (1.0 + fringe),
        amplitude=amplitude,
        visibility=visibility,
    )


def fisher_analytic(p: InterferometerParams) -> float:
    """
    Информация Фишера F = 4n̄Av² sin²φ / (2 − v²(cos 2φ + 1)).

    При v = 1 выражение сокращается до 2n̄A для любого φ, включая φ ∈ {0, π}.
    """
    amplitude, visibility = amplitude_visibility(p.transmission, p.eta)
    if visibility == 1.0:
        return 2.0 * p.photon_budget * amplitude

    sin2 = math.sin(p.phi) ** 2
    denominator = 2.0 - visibility**2 * (math.cos(2.0 * p.phi) + 1.0)
    return 4.0 * p.photon_budget * amplitude * visibility**2 * sin2 / denominator


def poisson_truncation_bound(mu: float, tail_mass: float) -> int:
    """Наименьшее N, для которого P(X > N) < tail_mass при X ~ Poisson(mu)"""
    if mu <= 0.0:
        return 0

    def upper_tail(bound: int) -> float:
        # P(X > N) равно регуляризованной нижней гамма-функции P(N+1, mu)
        return float(gammainc(bound + 1, mu))

    bound = max(0, int(stats.poisson.isf(tail_mass, mu)))
    while upper_tail(bound) >= tail_mass:
        bound += 1
    while bound > 0 and upper_tail(bound - 1) < tail_mass:
        bound -= 1
    return bound


def _detector_moments(mu: float, tail_mass: float) -> Tuple[float, float, float]:
    """Суммы Σp, Σp·score, Σp·score² по усеченному распределению Пуассона"""
    if mu <= 0.0:
        # Ненулевая вероятность только у n = 0, где d ln p / dμ = −1
        return 1.0, -1.0, 1.0

    bound = poisson_truncation_bound(mu, tail_mass)
    counts = np.arange(bound + 1, dtype=float)
    prob = np.exp(stats.poisson.logpmf(counts, mu))
    score = counts / mu - 1.0
    return (
        math.fsum(prob),
        math.fsum(prob * score),
        math.fsum(prob * score * score),
    )


def fisher_numeric(p: InterferometerParams, tail_mass: float = None) -> float:
    """
    Информация Фишера прямым суммированием по исходам (n₁, n₂).

    Двойная сумма распадается на произведение одномерных сумм по независимым
    детекторам, поэтому стоимость линейна по границе усечения.
    """
    if tail_mass is None:
        tail_mass = Config.FISHER_TAIL_MASS
    if not 0.0 < tail_mass <= 1e-6:
        raise DomainError(f"Масса хвоста вне (0, 1e-6]: {tail_mass}")

    means = output_means(p)
    slope = means.amplitude * p.photon_budget * means.visibility * math.sin(p.phi)
    d1, d2 = slope, -slope

    s0_1, s1_1, s2_1 = _detector_moments(means.mean_n1, tail_mass)
    s0_2, s1_2, s2_2 = _detector_moments(means.mean_n2, tail_mass)

    return d1 * d1 * s2_1 * s0_2 + d2 * d2 * s2_2 * s0_1 + 2.0 * d1 * d2 * s1_1 * s1_2


def uncertainty_from_fisher(fisher: float) -> float:
    """δφ = 1/√F; бесконечность, если F не несет информации о фазе"""
    if not fisher > 1.0 / Config.SATURATION_LIMIT**2:
        return math.inf
    return 1.0 / math.sqrt(fisher)


def optimal_transmission(eta: float, verify: bool = False) -> float:
    """Оптимальное пропускание T = 1/(1+√η)"""
    _validate_eta(eta)
    if verify:
        closed_form, _ = optimal_transmission_verified(eta)
        return closed_form
    return 1.0 / (1.0 + math.sqrt(eta))


def optimal_transmission_verified(eta: float) -> Tuple[float, float]:
    """
    Сверяет замкнутую формулу с максимизацией Фишера по T при φ = π/2.

    Returns:
        Tuple[float, float]: (замкнутая формула, результат золотого сечения)
    """
    _validate_eta(eta)
    closed_form = 1.0 / (1.0 + math.sqrt(eta))

    def fisher_at(transmission: float) -> float:
        return fisher_analytic(InterferometerParams(transmission, eta, math.pi / 2, 1.0))

    searched, _ = golden_section_maximize(fisher_at, 0.0, 1.0, tol=Config.GOLDEN_TOL)
    if abs(searched - closed_form) > 1e-6:
        logger.error(f"Оптимальное T расходится: {closed_form} против {searched} при η={eta}")
        raise ConsistencyError(
            f"Золотое сечение дало T={searched}, формула дает T={closed_form}"
        )
    return closed_form, searched


def max_visibility_transmission(eta: float) -> float:
    """Пропускание T = 1/(1+η), сохраняющее полную видность"""
    _validate_eta(eta)
    return 1.0 / (1.0 + eta)


def multipass_transmission(eta: float, k: float) -> float:
    """Оптимальное T для k бесплатных проходов: 1/(1+η^{k/2})"""
    _validate_eta(eta)
    if k < 1:
        raise DomainError(f"Число проходов должно быть ≥ 1: {k}")
    return 1.0 / (1.0 + math.exp(0.5 * k * math.log(eta)))


def fisher_optimal_t_closed_form(eta: float, nbar: float, phi: float) -> float:
    """F = 4n̄η sin²φ / (1 + η − 2√η cos 2φ) при T = 1/(1+√η)"""
    _validate_eta(eta)
    _validate_budget(nbar)
    root = math.sqrt(eta)
    denominator = 1.0 + eta - 2.0 * root * math.cos(2.0 * phi)
    if denominator <= 0.0:
        # η = 1 и φ ∈ {0, π}: предел совпадает с 2n̄A = n̄
        return nbar
    return 4.0 * nbar * eta * math.sin(phi) ** 2 / denominator


def sil_uncertainty(eta: float, nbar: float) -> float:
    """Стандартный интерферометрический предел (1+√η)/(2√(n̄η))"""
    _validate_eta(eta)
    _validate_budget(nbar)
    return (1.0 + math.sqrt(eta)) / (2.0 * math.sqrt(nbar * eta))


def maxvis_uncertainty(eta: float, nbar: float) -> float:
    """Неопределенность при полной видности √((1+η)/(2n̄η)), не зависит от φ"""
    _validate_eta(eta)
    _validate_budget(nbar)
    return math.sqrt((1.0 + eta) / (2.0 * nbar * eta))


def strategy_transmission(strategy: PhaseStrategy, eta: float) -> float:
    strategy = PhaseStrategy(strategy)
    if strategy is PhaseStrategy.OPTIMAL_T:
        return optimal_transmission(eta)
    return max_visibility_transmission(eta)


def uncertainty_vs_phase(
    strategy: PhaseStrategy, eta: float, nbar: float, phi_grid: Sequence[float]
) -> List[Tuple[float, float]]:
    """Зависимость δφ от фазы для выбранной стратегии"""
    if len(phi_grid) == 0:
        raise DomainError("Сетка фаз пуста")
    _validate_budget(nbar)

    transmission = strategy_transmission(strategy, eta)
    curve = []
    for phi in phi_grid:
        fisher = fisher_analytic(InterferometerParams(transmission, eta, phi, nbar))
        curve.append((float(phi), uncertainty_from_fisher(fisher)))

    infinite = sum(1 for _, value in curve if math.isinf(value))
    if infinite:
        logger.warning(f"{infinite} точек сетки без информации о фазе ({strategy})")
    return curve
