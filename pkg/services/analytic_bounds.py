import logging
import math
import threading
from typing import Dict, Optional

from config import Config
from exceptions import DomainError, UnboundedImprovementError
from models import ChopRegime, ChopRegimeKind, MultipassOptimum
from utils import bisect_root

logger = logging.getLogger(__name__)

# Показатель, выше которого exp() переполняется
_EXP_LIMIT = 700.0

# Корни вычисляются один раз; блокировка защищает первый доступ из разных потоков
_constants_lock = threading.Lock()
_constants: Dict[str, float] = {}


def _validate_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"Пропускание η вне (0, 1]: {eta}")


def _validate_resource(n: float) -> None:
    if not n >= 1:
        raise DomainError(f"Ресурс n должен быть ≥ 1: {n}")


def _inverse_survival(power: float, eta: float) -> float:
    """η^{-power/2}; бесконечность при переполнении"""
    exponent = -0.5 * power * math.log(eta)
    if exponent > _EXP_LIMIT:
        return math.inf
    return math.exp(exponent)


def eta_zero() -> float:
    """Граница η₀: корень 1 + √η + ln η = 0"""
    with _constants_lock:
        if "eta0" not in _constants:
            _constants["eta0"] = bisect_root(
                lambda eta: 1.0 + math.sqrt(eta) + math.log(eta),
                0.1,
                0.5,
                xtol=Config.ROOT_TOL,
            )
            logger.debug(f"η₀ = {_constants['eta0']!r}")
        return _constants["eta0"]


def interior_k_coefficient() -> float:
    """Коэффициент u* в k = u*/|ln η| внутреннего режима (≈ 1.478)"""
    return -math.log(eta_zero())


def xi_constant() -> float:
    """Корень ξ·e^{ξ+1} = 1 на (0, 1)"""
    with _constants_lock:
        if "xi" not in _constants:
            _constants["xi"] = bisect_root(
                lambda xi: xi * math.exp(xi + 1.0) - 1.0, 0.0, 1.0, xtol=Config.XI_TOL
            )
            logger.debug(f"ξ = {_constants['xi']!r}")
        return _constants["xi"]


def heisenberg_limit(n: int) -> float:
    """Предел Гейзенберга 1/n"""
    _validate_resource(n)
    return 1.0 / n


def shot_noise_limit(n: float) -> float:
    """Опорный дробовой шум 1/√n"""
    _validate_resource(n)
    return 1.0 / math.sqrt(n)


def noon_uncertainty(n: float, eta: float) -> float:
    """
    Неопределенность N00N-состояния с оптимальными весами под потерями:
    (1 + η^{n/2}) / (2n η^{n/2}).

    η^{n/2} берется через exp((n/2) ln η); при переполнении возвращается inf.
    """
    _validate_resource(n)
    _validate_eta(eta)
    return (_inverse_survival(n, eta) + 1.0) / (2.0 * n)


def chop_uncertainty(n: float, k: float, eta: float) -> float:
    """k-фотонное N00N-состояние, отправленное m = n/k раз"""
    _validate_resource(n)
    _validate_eta(eta)
    if not 1.0 <= k <= n * (1.0 + 1e-12):
        raise DomainError(f"k вне [1, n]: k={k}, n={n}")
    return (_inverse_survival(k, eta) + 1.0) / (2.0 * math.sqrt(k * n))


def _interior_k(n: float, eta: float) -> float:
    """Корень 1 + η^{k/2} + k ln η = 0 на [1, n]"""
    log_eta = math.log(eta)
    return bisect_root(
        lambda k: 1.0 + math.exp(0.5 * k * log_eta) + k * log_eta,
        1.0,
        float(n),
        xtol=Config.ROOT_TOL,
    )


def chop_optimal(n: float, eta: float) -> ChopRegime:
    """
    Оптимальный размер порции k ∈ [1, n] для нарезки N00N-состояний.

    Три режима: k = 1 при η ≤ η₀, k = n при η > η₀^{1/n}, иначе внутренний корень.
    """
    _validate_resource(n)
    _validate_eta(eta)
    eta0 = eta_zero()

    if eta == 1.0:
        return ChopRegime(ChopRegimeKind.K_EQUALS_N, eta0, float(n), 1.0 / n)

    if eta <= eta0:
        delta_phi = (1.0 + math.sqrt(eta)) / (2.0 * math.sqrt(n * eta))
        return ChopRegime(ChopRegimeKind.K_EQUALS_1, eta0, 1.0, delta_phi)

    if eta > math.exp(math.log(eta0) / n):
        return ChopRegime(ChopRegimeKind.K_EQUALS_N, eta0, float(n), noon_uncertainty(n, eta))

    k_opt = _interior_k(n, eta)
    delta_phi = (
        (1.0 + math.sqrt(eta0))
        / (2.0 * math.sqrt(n * eta0))
        * math.sqrt(math.log(eta) / math.log(eta0))
    )
    return ChopRegime(ChopRegimeKind.INTERIOR, eta0, k_opt, delta_phi)


def multipass_as_resource(n: float, eta: float) -> ChopRegime:
    """Многопроходная стратегия с проходами как ресурсом эквивалентна нарезке"""
    return chop_optimal(n, eta)


def chop_optimal_integer(n: int, eta: float) -> ChopRegime:
    """Целочисленный режим: лучший из соседей floor/ceil релаксированного k"""
    relaxed = chop_optimal(n, eta)
    candidates = sorted(
        {min(max(1, math.floor(relaxed.k_opt)), int(n)), min(max(1, math.ceil(relaxed.k_opt)), int(n))}
    )
    best_k = candidates[0]
    best = chop_uncertainty(n, best_k, eta)
    for k in candidates[1:]:
        value = chop_uncertainty(n, k, eta)
        if value < best:
            best_k, best = k, value
    return ChopRegime(relaxed.regime, relaxed.eta0, float(best_k), best)


def _multipass_value(nbar: float, k: float, eta: float) -> float:
    return (_inverse_survival(k, eta) + 1.0) / (2.0 * k * math.sqrt(nbar))


def multipass_uncertainty(nbar: float, k: float, eta: float) -> float:
    """Бесплатные проходы: (1 + η^{k/2}) / (2k √(n̄ η^k))"""
    if not nbar > 0.0:
        raise DomainError(f"Бюджет фотонов должен быть положительным: {nbar}")
    if not k >= 1.0:
        raise DomainError(f"Число проходов должно быть ≥ 1: {k}")
    _validate_eta(eta)
    return _multipass_value(nbar, k, eta)


def multipass_optimal(nbar: float, eta: float) -> MultipassOptimum:
    """
    Оптимальное число бесплатных проходов k = 2(1+ξ)/|ln η| и
    δφ = |ln η| / (4√n̄ ξ).
    """
    if not nbar > 0.0:
        raise DomainError(f"Бюджет фотонов должен быть положительным: {nbar}")
    _validate_eta(eta)
    if eta == 1.0:
        raise UnboundedImprovementError(
            "При η = 1 неопределенность убывает с k без предела; ограничьте число проходов"
        )

    xi = xi_constant()
    abs_log = abs(math.log(eta))
    k_opt = 2.0 * (1.0 + xi) / abs_log
    delta_phi = abs_log / (4.0 * math.sqrt(nbar) * xi)

    direct = _multipass_value(nbar, k_opt, eta)
    if abs(direct - delta_phi) > 1e-10 * delta_phi:
        logger.warning(f"Замкнутая форма {delta_phi} и прямой расчет {direct} расходятся")
    if k_opt < 1.0:
        logger.debug(f"Релаксированное k={k_opt:.4f} < 1 при η={eta}")

    return MultipassOptimum(xi=xi, k_opt=k_opt, delta_phi=delta_phi)


def multipass_optimal_integer(
    nbar: float, eta: float, k_max: Optional[int] = None
) -> MultipassOptimum:
    """Целочисленный режим бесплатных проходов (k ≥ 1, не больше k_max)"""
    xi = xi_constant()
    if eta == 1.0:
        if k_max is None:
            raise UnboundedImprovementError(
                "При η = 1 нужен явный предел числа проходов k_max"
            )
        return MultipassOptimum(xi, float(k_max), multipass_uncertainty(nbar, k_max, eta))

    relaxed = multipass_optimal(nbar, eta)
    candidates = sorted({max(1, math.floor(relaxed.k_opt)), max(1, math.ceil(relaxed.k_opt))})
    if k_max is not None:
        candidates = sorted({min(k, k_max) for k in candidates})

    best_k = candidates[0]
    best = multipass_uncertainty(nbar, best_k, eta)
    for k in candidates[1:]:
        value = multipass_uncertainty(nbar, k, eta)
        if value < best:
            best_k, best = k, value
    return MultipassOptimum(xi, float(best_k), best)
