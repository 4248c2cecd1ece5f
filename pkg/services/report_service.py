"""
Сборка таблиц кривых сравнения стратегий и их вывод в CSV/JSON.
"""

import csv
import io
import json
import logging
import math
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import Config
from exceptions import DomainError, ReportIOError, UsageError
from models import CurveTable, InterferometerParams, Strategy, StrategyPoint
from services.analytic_bounds import (
    chop_optimal,
    chop_optimal_integer,
    eta_zero,
    heisenberg_limit,
    multipass_as_resource,
    multipass_optimal,
    multipass_optimal_integer,
    multipass_uncertainty,
    noon_uncertainty,
    shot_noise_limit,
    xi_constant,
)
from services.classical_interferometer import (
    PhaseStrategy,
    maxvis_uncertainty,
    output_means,
    sil_uncertainty,
    strategy_transmission,
    uncertainty_vs_phase,
)
from services.quantum_optimizer import optimize_multipass, optimize_weights

logger = logging.getLogger(__name__)

FIG3_STRATEGIES = (
    Strategy.SIL,
    Strategy.MAXVIS,
    Strategy.HL,
    Strategy.SN,
    Strategy.NOON,
    Strategy.CHOP,
    Strategy.MP_RESOURCE,
    Strategy.MP_FREE,
    Strategy.Q,
    Strategy.QMP,
)
QUANTUM_STRATEGIES = (Strategy.Q, Strategy.QMP)
FIG2_STRATEGIES = {Strategy.SIL: PhaseStrategy.OPTIMAL_T, Strategy.MAXVIS: PhaseStrategy.MAX_VISIBILITY}

OUTPUT_FORMATS = ("csv", "json")


def parse_strategies(tags: Iterable[str]) -> List[Strategy]:
    """Переводит метки в Strategy; неизвестная метка считается ошибкой использования"""
    strategies = []
    for tag in tags:
        try:
            strategy = Strategy(tag)
        except ValueError:
            known = ", ".join(s.value for s in Strategy)
            raise UsageError(f"Неизвестная стратегия {tag!r}; допустимы: {known}") from None
        if strategy not in strategies:
            strategies.append(strategy)
    return strategies


def _fig3_point(strategy: Strategy, n: int, eta: float, integer_k: bool) -> StrategyPoint:
    if strategy is Strategy.SIL:
        return StrategyPoint(strategy, n, 1, sil_uncertainty(eta, n))
    if strategy is Strategy.MAXVIS:
        return StrategyPoint(strategy, n, 1, maxvis_uncertainty(eta, n))
    if strategy is Strategy.HL:
        return StrategyPoint(strategy, n, 1, heisenberg_limit(n))
    if strategy is Strategy.SN:
        return StrategyPoint(strategy, n, 1, shot_noise_limit(n))
    if strategy is Strategy.NOON:
        return StrategyPoint(strategy, n, 1, noon_uncertainty(n, eta))

    if strategy in (Strategy.CHOP, Strategy.MP_RESOURCE):
        if integer_k:
            regime = chop_optimal_integer(n, eta)
        elif strategy is Strategy.CHOP:
            regime = chop_optimal(n, eta)
        else:
            regime = multipass_as_resource(n, eta)
        return StrategyPoint(strategy, n, regime.k_opt, regime.delta_phi, {"eta0": regime.eta0})

    if strategy is Strategy.MP_FREE:
        if integer_k:
            optimum = multipass_optimal_integer(n, eta)
            return StrategyPoint(strategy, n, optimum.k_opt, optimum.delta_phi, {"xi": optimum.xi})
        optimum = multipass_optimal(n, eta)
        if optimum.k_opt < 1.0:
            # Меньше одного прохода невозможно: берем k = 1, релаксированное k в aux
            return StrategyPoint(
                strategy,
                n,
                1,
                multipass_uncertainty(n, 1, eta),
                {"k_relaxed": optimum.k_opt, "xi": optimum.xi},
            )
        return StrategyPoint(strategy, n, optimum.k_opt, optimum.delta_phi, {"xi": optimum.xi})

    if strategy is Strategy.Q:
        optimum = optimize_weights(n, eta)
        aux = {"x0": float(optimum.weights.x[0]), "xn": float(optimum.weights.x[-1])}
        return StrategyPoint(strategy, n, 1, optimum.delta_phi, aux)

    if strategy is Strategy.QMP:
        optimum = optimize_multipass(n, eta)
        aux = {"x0": float(optimum.weights.x[0]), "xn": float(optimum.weights.x[-1])}
        return StrategyPoint(strategy, n, optimum.k, optimum.delta_phi, aux)

    raise UsageError(f"Стратегия {strategy.value} не строится на кривой по n")


def curve_fig3(
    eta: float,
    n_values: Sequence[int],
    strategies: Optional[Sequence[Strategy]] = None,
    integer_k: bool = False,
    quantum_n_max: Optional[int] = None,
) -> CurveTable:
    """
    Неопределенность всех стратегий в зависимости от ресурса n.

    SIL, CHOP и MP-resource считают ресурс как фотоны × проходы,
    MP-free и QMP считают только фотоны. Квантовые стратегии строятся
    только до quantum_n_max.
    """
    if len(n_values) == 0:
        raise DomainError("Список значений n пуст")
    if strategies is None:
        strategies = FIG3_STRATEGIES
    strategies = parse_strategies(s.value if isinstance(s, Strategy) else s for s in strategies)
    if not strategies:
        raise DomainError("Список стратегий пуст")
    if quantum_n_max is None:
        quantum_n_max = Config.QUANTUM_N_MAX

    n_sorted = sorted(set(int(n) for n in n_values))
    if n_sorted[0] < 1:
        raise DomainError(f"Ресурс n должен быть ≥ 1: {n_sorted[0]}")

    rows = []
    for strategy in strategies:
        for n in n_sorted:
            if strategy in QUANTUM_STRATEGIES and n > quantum_n_max:
                continue
            rows.append(_fig3_point(strategy, n, eta, integer_k))
        logger.debug(f"Кривая {strategy.value} построена")

    metadata = {
        "figure": "fig3",
        "eta": eta,
        "strategies": [s.value for s in strategies],
        "n_min": n_sorted[0],
        "n_max": n_sorted[-1],
        "n_count": len(n_sorted),
        "quantum_n_max": quantum_n_max,
        "integer_k": integer_k,
        "eta0": eta_zero(),
        "xi": xi_constant(),
        "version": Config.VERSION,
    }
    logger.info(f"📊 Кривая fig3 при η={eta}: {len(rows)} строк")
    return CurveTable(metadata=metadata, rows=rows)


def default_phase_grid(points: Optional[int] = None) -> List[float]:
    """Равномерная сетка фаз на [0, 2π) без правого конца"""
    if points is None:
        points = Config.FIG2_GRID_POINTS
    return [float(phi) for phi in np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)]


def curve_fig2(
    eta: Optional[float] = None,
    nbar: Optional[float] = None,
    phi_grid: Optional[Sequence[float]] = None,
) -> CurveTable:
    """
    Зависимость δφ от фазы для оптимального T (метка SIL) и полной видности
    (метка MAXVIS); средние отсчеты обоих детекторов идут в aux.
    """
    if eta is None:
        eta = Config.FIG2_ETA
    if nbar is None:
        nbar = Config.FIG2_NBAR
    if phi_grid is None:
        phi_grid = default_phase_grid()

    rows = []
    for strategy, phase_strategy in FIG2_STRATEGIES.items():
        transmission = strategy_transmission(phase_strategy, eta)
        for phi, delta_phi in uncertainty_vs_phase(phase_strategy, eta, nbar, phi_grid):
            means = output_means(InterferometerParams(transmission, eta, phi, nbar))
            aux = {
                "phi": phi,
                "transmission": transmission,
                "mean_n1": means.mean_n1,
                "mean_n2": means.mean_n2,
            }
            rows.append(StrategyPoint(strategy, nbar, 1, delta_phi, aux))

    metadata = {
        "figure": "fig2",
        "eta": eta,
        "nbar": nbar,
        "strategies": [s.value for s in FIG2_STRATEGIES],
        "phi_points": len(phi_grid),
        "version": Config.VERSION,
    }
    logger.info(f"📊 Кривая fig2 при η={eta}, n̄={nbar}: {len(rows)} строк")
    return CurveTable(metadata=metadata, rows=rows)


def format_number(value: float, saturate: bool = False) -> str:
    """Десятичная запись с 12 значащими цифрами; inf для бесконечных (и насыщенных при saturate)"""
    if math.isinf(value) or (saturate and value > Config.SATURATION_LIMIT):
        return "inf"
    if math.isnan(value):
        return "nan"
    return format(value, f".{Config.CSV_SIGNIFICANT_DIGITS}g")


def _aux_columns(rows: Sequence[StrategyPoint]) -> List[str]:
    return sorted({key for row in rows for key in row.aux})


def render_csv(table: CurveTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    aux_columns = _aux_columns(table.rows)
    writer.writerow(["strategy", "n", "k", "delta_phi"] + aux_columns)
    for row in table.rows:
        writer.writerow(
            [row.strategy.value, format_number(row.n), format_number(row.k), format_number(row.delta_phi, saturate=True)]
            + [format_number(row.aux[key]) if key in row.aux else "" for key in aux_columns]
        )
    return buffer.getvalue()


def _json_number(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_json(table: CurveTable) -> str:
    rows = []
    for row in table.rows:
        unbounded = row.is_infinite or row.is_saturated
        rows.append(
            {
                "strategy": row.strategy.value,
                "n": row.n,
                "k": row.k,
                "delta_phi": None if unbounded else row.delta_phi,
                "infinite": row.is_infinite,
                "saturated": row.is_saturated,
                "aux": {key: _json_number(value) for key, value in row.aux.items()},
            }
        )
    metadata = {key: _json_number(value) for key, value in table.metadata.items()}
    document = {"metadata": metadata, "rows": rows}
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _restore_delta_phi(item: Dict[str, Any]) -> float:
    """null δφ: inf для бесконечных, для насыщенных ближайшее число выше предела насыщения"""
    if item["delta_phi"] is not None:
        return item["delta_phi"]
    if item.get("saturated"):
        return math.nextafter(Config.SATURATION_LIMIT, math.inf)
    return math.inf


def load_json_table(text: str) -> CurveTable:
    """Обратное чтение JSON-отчета; флаги infinite и saturated сохраняются"""
    document = json.loads(text)
    rows = []
    for item in document["rows"]:
        aux = {key: (math.inf if value is None else value) for key, value in item["aux"].items()}
        rows.append(
            StrategyPoint(Strategy(item["strategy"]), item["n"], item["k"], _restore_delta_phi(item), aux)
        )
    return CurveTable(metadata=document["metadata"], rows=rows)


def render(table: CurveTable, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(table)
    if fmt == "json":
        return render_json(table)
    raise UsageError(f"Неизвестный формат {fmt!r}; допустимы: {', '.join(OUTPUT_FORMATS)}")


def emit(table: CurveTable, fmt: str, destination: Optional[str] = "-") -> None:
    """
    Записывает таблицу в файл или в стандартный вывод ("-" или None).
    Вывод побайтно воспроизводим для одинаковых таблиц.
    """
    text = render(table, fmt)
    if destination in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    try:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        logger.error(f"❌ Не удалось записать отчет в {destination}: {e}")
        raise ReportIOError(f"Не удалось записать {destination}: {e}") from e

    logger.info(f"✅ Отчет записан: {destination} ({len(table.rows)} строк)")


def dump_json(payload: Dict[str, Any]) -> str:
    """JSON-документ с сортировкой ключей для одиночных результатов"""
    cleaned = {key: _json_number(value) for key, value in payload.items()}
    return json.dumps(cleaned, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
