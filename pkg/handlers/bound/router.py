import argparse
import logging

from config import Config
from models import CurveTable, ExitCode, Strategy, StrategyPoint
from services.analytic_bounds import (
    chop_optimal,
    chop_optimal_integer,
    chop_uncertainty,
    heisenberg_limit,
    multipass_optimal,
    multipass_optimal_integer,
    multipass_uncertainty,
    noon_uncertainty,
)
from services.classical_interferometer import (
    max_visibility_transmission,
    maxvis_uncertainty,
    optimal_transmission,
    sil_uncertainty,
)
from services.report_service import OUTPUT_FORMATS, emit

logger = logging.getLogger(__name__)

BOUND_KINDS = ("sil", "maxvis", "hl", "noon", "chop", "mp")


def compute_bound(kind: str, eta: float, n: float, k=None, integer_k: bool = False) -> StrategyPoint:
    """Одна строка таблицы для замкнутой формулы"""
    if kind == "sil":
        return StrategyPoint(
            Strategy.SIL, n, 1, sil_uncertainty(eta, n), {"transmission": optimal_transmission(eta)}
        )
    if kind == "maxvis":
        return StrategyPoint(
            Strategy.MAXVIS,
            n,
            1,
            maxvis_uncertainty(eta, n),
            {"transmission": max_visibility_transmission(eta)},
        )
    if kind == "hl":
        return StrategyPoint(Strategy.HL, n, 1, heisenberg_limit(n))
    if kind == "noon":
        return StrategyPoint(Strategy.NOON, n, 1, noon_uncertainty(n, eta))

    if kind == "chop":
        if k is not None:
            return StrategyPoint(Strategy.CHOP, n, k, chop_uncertainty(n, k, eta))
        regime = chop_optimal_integer(n, eta) if integer_k else chop_optimal(n, eta)
        return StrategyPoint(Strategy.CHOP, n, regime.k_opt, regime.delta_phi, {"eta0": regime.eta0})

    # mp: бесплатные проходы, n задает средний бюджет фотонов
    if k is not None:
        return StrategyPoint(Strategy.MP_FREE, n, k, multipass_uncertainty(n, k, eta))
    optimum = multipass_optimal_integer(n, eta) if integer_k else multipass_optimal(n, eta)
    if optimum.k_opt < 1.0:
        aux = {"k_relaxed": optimum.k_opt, "xi": optimum.xi}
        return StrategyPoint(Strategy.MP_FREE, n, 1, multipass_uncertainty(n, 1, eta), aux)
    return StrategyPoint(Strategy.MP_FREE, n, optimum.k_opt, optimum.delta_phi, {"xi": optimum.xi})


def handle_bound(args: argparse.Namespace) -> int:
    point = compute_bound(args.kind, args.eta, args.n, args.k, args.integer)
    logger.debug(f"{args.kind}: δφ={point.delta_phi!r}")
    metadata = {"command": "bound", "kind": args.kind, "eta": args.eta, "version": Config.VERSION}
    emit(CurveTable(metadata=metadata, rows=[point]), args.format, args.out)
    return ExitCode.SUCCESS


def create_bound_router(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    """Регистрирует команду bound"""
    parser = subparsers.add_parser("bound", help="Замкнутые формулы границ неопределенности")
    parser.add_argument("kind", choices=BOUND_KINDS)
    parser.add_argument("--eta", type=float, required=True, help="Пропускание потерь η")
    parser.add_argument("--n", type=float, required=True, help="Ресурс n или бюджет n̄")
    parser.add_argument("--k", type=float, default=None, help="Фиксированное k (chop, mp)")
    parser.add_argument("--integer", action="store_true", help="Целочисленный оптимум k")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="csv")
    parser.add_argument("--out", default="-", help="Файл вывода или '-'")
    parser.set_defaults(handler=handle_bound)
    return parser
