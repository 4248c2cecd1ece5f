import argparse
import logging
import sys

from models import ExitCode
from services.verification_service import VerificationService

logger = logging.getLogger(__name__)


def handle_verify(args: argparse.Namespace) -> int:
    service = VerificationService(fast=args.fast)
    passed = service.run_all_checks()
    sys.stdout.write(service.format_summary())

    if not passed:
        logger.error(f"❌ Проверки провалены: {len(service.errors)}")
        return ExitCode.VERIFICATION_FAILED
    logger.info("🎉 Все проверки пройдены")
    return ExitCode.SUCCESS


def create_verify_router(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    """Регистрирует команду verify"""
    parser = subparsers.add_parser("verify", help="Перекрестные проверки модулей")
    parser.add_argument("--fast", action="store_true", help="Сокращенные сетки")
    parser.set_defaults(handler=handle_verify)
    return parser
