import argparse
import logging
import sys

from models import ExitCode, QuantumOptimum
from services.quantum_optimizer import optimize_multipass, optimize_weights
from services.report_service import dump_json

logger = logging.getLogger(__name__)


def optimum_payload(optimum: QuantumOptimum) -> dict:
    """Сериализуемое описание оптимума"""
    report = optimum.solver_report
    return {
        "n": optimum.n,
        "k": optimum.k,
        "eta": optimum.eta,
        "delta_phi": optimum.delta_phi,
        "weights": list(optimum.weights.as_tuple()),
        "iterations": report.iterations,
        "gradient_norm": report.gradient_norm,
        "starts": report.starts,
        "multistart_spread": report.multistart_spread,
        "k_relaxed": optimum.k_relaxed,
    }


def handle_optimize(args: argparse.Namespace) -> int:
    if args.kind == "quantum":
        optimum = optimize_weights(args.n, args.eta, args.tol)
    else:
        optimum = optimize_multipass(args.n, args.eta, args.kmax, args.tol, relaxed_k=args.relaxed_k)

    logger.info(f"✅ Оптимум {args.kind}: δφ={optimum.delta_phi:.9g}, k={optimum.k}")
    sys.stdout.write(dump_json(optimum_payload(optimum)))
    return ExitCode.SUCCESS


def create_optimize_router(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    """Регистрирует команду optimize"""
    parser = subparsers.add_parser("optimize", help="Оптимальное квантовое состояние")
    parser.add_argument("kind", choices=("quantum", "quantum-mp"))
    parser.add_argument("--eta", type=float, required=True)
    parser.add_argument("--n", type=int, required=True, help="Число фотонов")
    parser.add_argument("--kmax", type=int, default=None, help="Предел числа проходов")
    parser.add_argument("--tol", type=float, default=None, help="Допуск сходимости")
    parser.add_argument(
        "--relaxed-k", action="store_true", help="Дополнительно оценить оптимум по вещественному k"
    )
    parser.set_defaults(handler=handle_optimize)
    return parser
