import logging
import os
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _env_float(name: str, default: float) -> float:
    """Читает вещественное число из окружения, при ошибке берет значение по умолчанию"""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"⚠️ Ошибка парсинга {name}={raw!r}, используем {default}")
        return default


def _env_int(name: str, default: int) -> int:
    """Читает целое число из окружения, при ошибке берет значение по умолчанию"""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"⚠️ Ошибка парсинга {name}={raw!r}, используем {default}")
        return default


class Config:
    """Конфигурация приложения"""

    VERSION = "1.0.0"

    # === LOGGING ===
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE = os.getenv("LOG_FILE")

    # === ENVIRONMENT ===
    ENVIRONMENT = os.getenv("ENVIRONMENT", "development")
    IS_PRODUCTION = ENVIRONMENT.lower() == "production"

    # === CLASSICAL INTERFEROMETER ===
    # Масса отброшенного хвоста Пуассона при численном расчете Фишера
    FISHER_TAIL_MASS = _env_float("FISHER_TAIL_MASS", 1e-12)
    GOLDEN_TOL = _env_float("GOLDEN_TOL", 1e-8)

    # === ROOT FINDING ===
    ROOT_TOL = 1e-12
    XI_TOL = 1e-14

    # === QUANTUM OPTIMIZER ===
    OPTIMIZER_TOL = _env_float("OPTIMIZER_TOL", 1e-9)
    OPTIMIZER_MAX_ITERATIONS = _env_int("OPTIMIZER_MAX_ITERATIONS", 100_000)
    OPTIMIZER_EXTRA_STARTS = _env_int("OPTIMIZER_EXTRA_STARTS", 3)
    OPTIMIZER_SEED = _env_int("OPTIMIZER_SEED", 0)

    # === MONTE CARLO ===
    MC_DEFAULT_SEED = _env_int("MC_DEFAULT_SEED", 20240601)
    MC_EDGE_DISCARD_LIMIT = 0.01

    # === REPORTS ===
    QUANTUM_N_MAX = _env_int("QUANTUM_N_MAX", 30)
    CLOSED_FORM_N_MAX = _env_int("CLOSED_FORM_N_MAX", 1000)
    FIG2_ETA = 0.1
    FIG2_NBAR = 100.0
    FIG2_GRID_POINTS = 72
    FIG3_ETA = 0.6
    SATURATION_LIMIT = 1e12
    CSV_SIGNIFICANT_DIGITS = 12

    @classmethod
    def is_production(cls) -> bool:
        """Проверить, является ли окружение продакшеном"""
        return cls.IS_PRODUCTION

    @classmethod
    def validate_config(cls) -> bool:
        """Проверка корректности конфигурации"""
        errors = []

        if not 0.0 < cls.FISHER_TAIL_MASS <= 1e-6:
            errors.append(f"FISHER_TAIL_MASS вне (0, 1e-6]: {cls.FISHER_TAIL_MASS}")

        if not 1e-12 <= cls.OPTIMIZER_TOL <= 1e-4:
            errors.append(f"OPTIMIZER_TOL вне [1e-12, 1e-4]: {cls.OPTIMIZER_TOL}")

        if cls.OPTIMIZER_MAX_ITERATIONS < 1:
            errors.append("OPTIMIZER_MAX_ITERATIONS должен быть положительным")

        if cls.OPTIMIZER_EXTRA_STARTS < 0:
            errors.append("OPTIMIZER_EXTRA_STARTS не может быть отрицательным")

        if cls.QUANTUM_N_MAX < 1 or cls.CLOSED_FORM_N_MAX < 1:
            errors.append("Границы диапазона n должны быть положительными")

        if not 0.0 < cls.GOLDEN_TOL < 1e-3:
            errors.append(f"GOLDEN_TOL вне (0, 1e-3): {cls.GOLDEN_TOL}")

        if errors:
            for error in errors:
                logger.error(f"❌ Ошибка конфигурации: {error}")
            return False

        return True

    @classmethod
    def summary(cls) -> Dict[str, Any]:
        """Краткая сводка конфигурации для отладочного лога"""
        return {
            "version": cls.VERSION,
            "environment": cls.ENVIRONMENT,
            "fisher_tail_mass": cls.FISHER_TAIL_MASS,
            "optimizer_tol": cls.OPTIMIZER_TOL,
            "optimizer_max_iterations": cls.OPTIMIZER_MAX_ITERATIONS,
            "quantum_n_max": cls.QUANTUM_N_MAX,
            "closed_form_n_max": cls.CLOSED_FORM_N_MAX,
        }


# Валидация конфигурации при импорте
if not Config.validate_config():
    raise RuntimeError("Некорректная конфигурация")
