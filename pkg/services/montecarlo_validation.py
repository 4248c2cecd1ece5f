"""
Моделирование отсчетов классического (многопроходного) интерферометра и
проверка насыщения границы Крамера-Рао оценкой максимального правдоподобия.
"""

import logging
import math
import numbers
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import xlogy

from config import Config
from exceptions import DomainError
from models import CrbReport, InterferometerParams, PhaseEstimate, TrialBatch
from services.classical_interferometer import fisher_analytic, output_means
from utils import INV_PHI, INV_PHI_SQUARE, golden_section_steps

logger = logging.getLogger(__name__)

# Допуск на близость оценки к краю окна, в долях точности поиска
EDGE_TOL_FACTOR = 10.0


def multipass_params(p: InterferometerParams, k: int) -> InterferometerParams:
    """Эквивалентный однопроходный эксперимент: η → η^k, φ → kφ"""
    return InterferometerParams(
        transmission=p.transmission,
        eta=math.exp(k * math.log(p.eta)),
        phi=k * p.phi,
        photon_budget=p.photon_budget,
    )


def _validate_passes(k: int) -> None:
    if not isinstance(k, numbers.Integral) or k < 1:
        raise DomainError(f"Число проходов должно быть целым ≥ 1: {k!r}")


def _validate_seed(seed: int) -> None:
    if not isinstance(seed, numbers.Integral) or not 0 <= seed < 2**64:
        raise DomainError(f"Зерно должно быть 64-битным неотрицательным целым: {seed!r}")


def trial_generator(seed: int, trial_index: int) -> np.random.Generator:
    """Независимый поток Philox для испытания: ключ зерно, счетчик индекс испытания"""
    return np.random.Generator(np.random.Philox(key=seed, counter=trial_index << 64))


def simulate_clicks(p: InterferometerParams, k: int, trials: int, seed: int) -> TrialBatch:
    """
    Пары отсчетов (n₁, n₂) из независимых распределений Пуассона.

    Каждое испытание использует собственный поток, поэтому результат
    не зависит от порядка и разбиения испытаний.
    """
    _validate_passes(k)
    _validate_seed(seed)
    if not isinstance(trials, numbers.Integral) or trials < 1:
        raise DomainError(f"Число испытаний должно быть ≥ 1: {trials!r}")

    means = output_means(multipass_params(p, k))
    lam = np.array([means.mean_n1, means.mean_n2])

    samples = np.empty((trials, 2), dtype=np.int64)
    for index in range(trials):
        samples[index] = trial_generator(seed, index).poisson(lam)
    samples.setflags(write=False)

    logger.debug(f"Смоделировано {trials} испытаний, средние {lam.tolist()}")
    return TrialBatch(params=p, passes=k, trials=trials, seed=seed, samples=samples)


def _mean_curves(batch: TrialBatch, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Средние μ₁(φ), μ₂(φ) и производная dμ₁/dφ для многопроходных параметров"""
    mapped = multipass_params(batch.params, batch.passes)
    means = output_means(mapped)
    scale = means.amplitude * batch.params.photon_budget
    fringe = means.visibility * np.cos(batch.passes * phi)
    slope = scale * means.visibility * batch.passes * np.sin(batch.passes * phi)
    return scale * (1.0 - fringe), scale * (1.0 + fringe), slope


def _log_likelihood(batch: TrialBatch, phi: np.ndarray) -> np.ndarray:
    """Логарифм правдоподобия без слагаемых, не зависящих от φ"""
    mu1, mu2, _ = _mean_curves(batch, phi)
    n1 = batch.samples[:, 0]
    n2 = batch.samples[:, 1]
    return xlogy(n1, mu1) - mu1 + xlogy(n2, mu2) - mu2


def mle_estimate(
    batch: TrialBatch, window_halfwidth: Optional[float] = None, tol: Optional[float] = None
) -> List[PhaseEstimate]:
    """
    Оценка максимального правдоподобия в окне [φ − w, φ + w] вокруг истинной фазы.

    Золотое сечение выполняется сразу для всех испытаний; на одной монотонной
    ветви полосы правдоподобие унимодально.
    """
    k = batch.passes
    if window_halfwidth is None:
        window_halfwidth = math.pi / (4.0 * k)
    if tol is None:
        tol = Config.GOLDEN_TOL
    if not 0.0 < window_halfwidth <= math.pi / (2.0 * k):
        raise DomainError(
            f"Полуширина окна {window_halfwidth} выходит за ветвь полосы π/(2k) = {math.pi / (2.0 * k)}"
        )

    phi_true = batch.params.phi
    low = phi_true - window_halfwidth
    high = phi_true + window_halfwidth

    a = np.full(batch.trials, low)
    h = np.full(batch.trials, high - low)
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = _log_likelihood(batch, c)
    yd = _log_likelihood(batch, d)

    for _ in range(golden_section_steps(high - low, tol)):
        left = yc > yd
        h = INV_PHI * h
        # Максимум левее d: отрезок [a, d]
        new_c_left = a + INV_PHI_SQUARE * h
        # Максимум правее c: отрезок [c, b]
        a = np.where(left, a, c)
        new_d_right = a + INV_PHI * h

        c, d = np.where(left, new_c_left, d), np.where(left, c, new_d_right)
        y_new = _log_likelihood(batch, np.where(left, c, d))
        yc, yd = np.where(left, y_new, yd), np.where(left, yc, y_new)

    phi_hat = np.where(yc > yd, c, d)
    edge_margin = EDGE_TOL_FACTOR * tol
    at_edge = (phi_hat - low < edge_margin) | (high - phi_hat < edge_margin)

    return [PhaseEstimate(float(value), bool(edge)) for value, edge in zip(phi_hat, at_edge)]


def empirical_fisher(batch: TrialBatch) -> float:
    """Средний квадрат производной логарифма правдоподобия в истинной фазе"""
    phi = np.array([batch.params.phi])
    mu1, mu2, slope = _mean_curves(batch, phi)
    n1 = batch.samples[:, 0].astype(float)
    n2 = batch.samples[:, 1].astype(float)

    ratio1 = np.zeros_like(n1)
    ratio2 = np.zeros_like(n2)
    np.divide(n1, mu1, out=ratio1, where=mu1 > 0.0)
    np.divide(n2, mu2, out=ratio2, where=mu2 > 0.0)
    score = (ratio1 - 1.0) * slope - (ratio2 - 1.0) * slope
    return math.fsum(score * score) / batch.trials


def crb_uncertainty(p: InterferometerParams, k: int) -> float:
    """1/√F для k проходов: F = k² F(T, η^k, kφ, n̄)"""
    _validate_passes(k)
    fisher = k * k * fisher_analytic(multipass_params(p, k))
    if fisher <= 0.0:
        return math.inf
    return 1.0 / math.sqrt(fisher)


def rmse_vs_crb(
    p: InterferometerParams,
    k: int,
    trials: int,
    seed: int,
    window_halfwidth: Optional[float] = None,
) -> CrbReport:
    """Эмпирическая RMSE оценки МП против границы Крамера-Рао"""
    return crb_report(simulate_clicks(p, k, trials, seed), window_halfwidth)


def crb_report(batch: TrialBatch, window_halfwidth: Optional[float] = None) -> CrbReport:
    """Отчет RMSE/CRB по уже смоделированной серии"""
    p, k, trials = batch.params, batch.passes, batch.trials
    estimates = mle_estimate(batch, window_halfwidth)

    errors = [estimate.phi_hat - p.phi for estimate in estimates if not estimate.at_edge]
    discarded = trials - len(errors)
    crb = crb_uncertainty(p, k)

    if errors:
        rmse = math.sqrt(math.fsum(e * e for e in errors) / len(errors))
        bias = math.fsum(errors) / len(errors)
    else:
        rmse = math.nan
        bias = math.nan
    ratio = rmse / crb if math.isfinite(crb) else math.nan

    reliable = bool(errors) and discarded <= Config.MC_EDGE_DISCARD_LIMIT * trials
    if not reliable:
        logger.warning(
            f"⚠️ Отчет ненадежен: {discarded} из {trials} оценок на краю окна"
        )

    logger.info(f"🎯 RMSE={rmse:.6g}, CRB={crb:.6g}, отношение={ratio:.4f} (k={k}, испытаний={trials})")
    return CrbReport(
        rmse=rmse,
        crb=crb,
        ratio=ratio,
        trials=trials,
        discarded=discarded,
        bias=bias,
        reliable=reliable,
    )
