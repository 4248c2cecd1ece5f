"""
Скалярные численные помощники: золотое сечение и бисекция с проверкой скобки.
"""

import logging
import math
from typing import Callable, Tuple

from scipy import optimize

from exceptions import DomainError

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1 / φ
INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0  # 1 / φ²


def golden_section_steps(width: float, tol: float) -> int:
    """Число шагов золотого сечения, сужающих отрезок width до tol"""
    if width <= tol:
        return 0
    return int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))


def golden_section_search(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-8
) -> Tuple[float, float]:
    """
    Минимизация унимодальной функции на [a, b] золотым сечением.

    Args:
        f: Минимизируемая функция
        a, b: Границы отрезка
        tol: Ширина итогового интервала

    Returns:
        Tuple[float, float]: (аргумент минимума, значение функции в нем)
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    steps = golden_section_steps(h, tol)

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(steps):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        return c, yc
    return d, yd


def golden_section_maximize(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-8
) -> Tuple[float, float]:
    """Максимизация через минимизацию -f"""
    x, value = golden_section_search(lambda t: -f(t), a, b, tol)
    return x, -value


def bisect_root(
    f: Callable[[float], float], a: float, b: float, xtol: float = 1e-12
) -> float:
    """
    Корень f на [a, b] бисекцией.
    Перед запуском проверяет, что концы скобки имеют разные знаки.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        logger.error(f"Скобка [{a}, {b}] не содержит корня: f(a)={fa}, f(b)={fb}")
        raise DomainError(f"Скобка [{a}, {b}] не содержит смены знака")

    root = optimize.bisect(f, a, b, xtol=xtol, maxiter=400)
    return float(root)
