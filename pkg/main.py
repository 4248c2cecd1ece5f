import argparse
import logging
import sys
from typing import List, NoReturn, Optional

from config import Config
from exceptions import (
    ConsistencyError,
    ConvergenceError,
    DomainError,
    PhaseBoundError,
    ReportIOError,
    UsageError,
)
from handlers.bound import create_bound_router
from handlers.curve import create_curve_router
from handlers.optimize import create_optimize_router
from handlers.simulate import create_simulate_router
from handlers.verify import create_verify_router
from models import ExitCode


# Настройка логирования
def setup_logging(verbose: bool = False) -> logging.Logger:
    """Логи идут в stderr: стандартный вывод занят таблицами"""
    log_level = logging.DEBUG if verbose else getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if Config.LOG_FILE:
        handlers.append(logging.FileHandler(Config.LOG_FILE, encoding="utf-8"))

    logging.basicConfig(level=log_level, format=Config.LOG_FORMAT, handlers=handlers, force=True)

    # Отключаем слишком подробные логи сторонних библиотек
    logging.getLogger("numpy").setLevel(logging.WARNING)
    logging.getLogger("scipy").setLevel(logging.WARNING)

    return logging.getLogger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """argparse с ошибками через исключение вместо sys.exit(2)"""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog="phasebound",
        description="Границы неопределенности оценки фазы в интерферометре с потерями",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Отладочный лог")
    parser.add_argument("--version", action="version", version=f"%(prog)s {Config.VERSION}")

    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    create_bound_router(subparsers)
    create_optimize_router(subparsers)
    create_curve_router(subparsers)
    create_simulate_router(subparsers)
    create_verify_router(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа; возвращает код завершения"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: ошибка: {e}\n")
        return ExitCode.USAGE

    logger = setup_logging(args.verbose)
    logger.debug(f"Конфигурация: {Config.summary()}")

    try:
        return int(args.handler(args))
    except (UsageError, DomainError) as e:
        logger.error(f"❌ Неверные параметры: {e}")
        return ExitCode.USAGE
    except ReportIOError as e:
        logger.error(f"❌ Ошибка ввода-вывода: {e}")
        return ExitCode.IO_ERROR
    except (ConvergenceError, ConsistencyError) as e:
        logger.error(f"❌ Результат не прошел внутреннюю проверку: {e}")
        return ExitCode.VERIFICATION_FAILED
    except PhaseBoundError as e:
        logger.error(f"❌ Ошибка расчета: {e}")
        return ExitCode.VERIFICATION_FAILED
    except BrokenPipeError:
        return ExitCode.IO_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
