import logging
import math

import numpy as np
from scipy.special import gammaln, xlogy

from exceptions import DomainError
from models import LossKernelRow

logger = logging.getLogger(__name__)


def _validate_eta(eta: float) -> None:
    if not isinstance(eta, (int, float)) or not 0.0 < eta <= 1.0:
        raise DomainError(f"Пропускание η вне (0, 1]: {eta}")


def log_binomial(s: int, l: int) -> float:
    """ln C(s, l) через логарифм гамма-функции"""
    if s < 0 or not 0 <= l <= s:
        raise DomainError(f"Недопустимые индексы биномиального коэффициента: s={s}, l={l}")
    return float(gammaln(s + 1) - gammaln(l + 1) - gammaln(s - l + 1))


def loss_kernel_row(s: int, eta: float) -> LossKernelRow:
    """
    Вероятности B^s_l(η) = C(s,l) η^{s-l} (1-η)^l потери l из s фотонов.

    Слагаемые считаются в логарифмах: прямое η^{s-l} теряет точность уже при s ~ 700.
    """
    if s < 0:
        raise DomainError(f"Число фотонов должно быть неотрицательным: {s}")
    _validate_eta(eta)

    l = np.arange(s + 1, dtype=float)
    log_binom = gammaln(s + 1) - gammaln(l + 1) - gammaln(s - l + 1)
    # xlogy дает 0 при нулевом показателе, в том числе для ln(1-η) при η = 1
    log_b = log_binom + xlogy(s - l, eta) + xlogy(l, 1.0 - eta)
    probabilities = np.exp(log_b)

    total = math.fsum(probabilities)
    probabilities = probabilities / total
    probabilities.setflags(write=False)

    return LossKernelRow(s=s, eta=float(eta), probabilities=probabilities)


def loss_kernel_matrix(n: int, eta: float) -> np.ndarray:
    """Нижнетреугольная матрица B[s, l] для s, l = 0..n"""
    if n < 0:
        raise DomainError(f"Число фотонов должно быть неотрицательным: {n}")
    _validate_eta(eta)

    kernel = np.zeros((n + 1, n + 1))
    for s in range(n + 1):
        kernel[s, : s + 1] = loss_kernel_row(s, eta).probabilities
    kernel.setflags(write=False)
    return kernel
