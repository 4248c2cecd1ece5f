import argparse
import dataclasses
import logging
import math
import sys

from config import Config
from models import ExitCode, InterferometerParams
from services.classical_interferometer import PhaseStrategy, strategy_transmission
from services.montecarlo_validation import crb_report, empirical_fisher, simulate_clicks
from services.report_service import dump_json

logger = logging.getLogger(__name__)


def handle_simulate(args: argparse.Namespace) -> int:
    if args.transmission is None:
        transmission = strategy_transmission(PhaseStrategy(args.strategy), args.eta)
    else:
        transmission = args.transmission
    params = InterferometerParams(transmission, args.eta, args.phi, args.nbar)

    batch = simulate_clicks(params, args.passes, args.trials, args.seed)
    report = crb_report(batch, args.window)

    payload = dataclasses.asdict(report)
    payload.update(
        {
            "eta": args.eta,
            "nbar": args.nbar,
            "phi": params.phi,
            "passes": args.passes,
            "seed": args.seed,
            "transmission": transmission,
            "empirical_fisher": empirical_fisher(batch),
        }
    )
    sys.stdout.write(dump_json(payload))
    return ExitCode.SUCCESS


def create_simulate_router(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    """Регистрирует команду simulate"""
    parser = subparsers.add_parser("simulate", help="Монте-Карло проверка границы Крамера-Рао")
    parser.add_argument("--eta", type=float, required=True)
    parser.add_argument("--nbar", type=float, required=True)
    parser.add_argument("--phi", type=float, default=math.pi / 2)
    parser.add_argument("--passes", type=int, default=1)
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=Config.MC_DEFAULT_SEED)
    parser.add_argument("--window", type=float, default=None, help="Полуширина окна поиска")
    parser.add_argument(
        "--strategy",
        choices=[s.value for s in PhaseStrategy],
        default=PhaseStrategy.OPTIMAL_T.value,
    )
    parser.add_argument("--transmission", type=float, default=None, help="Явное пропускание T")
    parser.set_defaults(handler=handle_simulate)
    return parser
