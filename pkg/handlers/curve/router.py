import argparse
import logging

from config import Config
from exceptions import UsageError
from models import ExitCode
from services.report_service import (
    OUTPUT_FORMATS,
    curve_fig2,
    curve_fig3,
    default_phase_grid,
    emit,
    parse_strategies,
)

logger = logging.getLogger(__name__)


def handle_curve(args: argparse.Namespace) -> int:
    if args.figure == "fig2":
        if args.strategies:
            raise UsageError("Для fig2 набор стратегий фиксирован (SIL, MAXVIS)")
        table = curve_fig2(
            eta=Config.FIG2_ETA if args.eta is None else args.eta,
            nbar=Config.FIG2_NBAR if args.nbar is None else args.nbar,
            phi_grid=default_phase_grid(args.points),
        )
    else:
        strategies = parse_strategies(args.strategies.split(",")) if args.strategies else None
        n_max = Config.CLOSED_FORM_N_MAX if args.n_max is None else args.n_max
        if n_max < 1:
            raise UsageError(f"--n-max должен быть ≥ 1: {n_max}")
        table = curve_fig3(
            eta=Config.FIG3_ETA if args.eta is None else args.eta,
            n_values=range(1, n_max + 1),
            strategies=strategies,
            integer_k=args.integer_k,
            quantum_n_max=args.quantum_n_max,
        )

    emit(table, args.format, args.out)
    return ExitCode.SUCCESS


def create_curve_router(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    """Регистрирует команду curve"""
    parser = subparsers.add_parser("curve", help="Таблицы кривых сравнения стратегий")
    parser.add_argument("figure", choices=("fig2", "fig3"))
    parser.add_argument("--eta", type=float, default=None)
    parser.add_argument("--out", default="-", help="Файл вывода или '-'")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default="csv")
    parser.add_argument("--nbar", type=float, default=None, help="Бюджет фотонов (fig2)")
    parser.add_argument("--points", type=int, default=None, help="Число точек сетки фаз (fig2)")
    parser.add_argument("--n-max", type=int, default=None, help="Верхняя граница n (fig3)")
    parser.add_argument(
        "--quantum-n-max", type=int, default=None, help="Верхняя граница n для Q и QMP (fig3)"
    )
    parser.add_argument("--strategies", default=None, help="Метки через запятую (fig3)")
    parser.add_argument("--integer-k", action="store_true", help="Целочисленные k (fig3)")
    parser.set_defaults(handler=handle_curve)
    return parser
