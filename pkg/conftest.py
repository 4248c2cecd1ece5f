"""
Глобальная конфигурация pytest для расчетов фазовых границ.
Содержит общие фикстуры, оракулы перебора и маркеры тестов.
"""

import itertools
import math
from typing import Callable, Iterator, Tuple

import numpy as np
import pytest

from models import InterferometerParams, WeightVector
from services.classical_interferometer import optimal_transmission
from services.loss_kernel import loss_kernel_matrix


@pytest.fixture
def lossless_params() -> InterferometerParams:
    """Симметричный делитель без потерь в квадратуре"""
    return InterferometerParams(transmission=0.5, eta=1.0, phi=math.pi / 2, photon_budget=100.0)


@pytest.fixture
def optimal_params() -> InterferometerParams:
    """Оптимальное T при η = 0.6 в квадратуре"""
    return InterferometerParams(
        transmission=optimal_transmission(0.6), eta=0.6, phi=math.pi / 2, photon_budget=100.0
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Детерминированный генератор для случайных точек симплекса"""
    return np.random.default_rng(12345)


def _grid_compositions(total: int, parts: int) -> Iterator[tuple]:
    """Все разбиения total на parts неотрицательных слагаемых"""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (total + parts - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(parts))


def batch_quantum_fisher(points: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """F_Q = Σ s² x − Σ N²/D сразу для строк матрицы points"""
    s = np.arange(points.shape[1], dtype=float)
    denominators = points @ kernel
    numerators = (points * s) @ kernel
    ratio = np.zeros_like(denominators)
    np.divide(numerators**2, denominators, out=ratio, where=denominators > 0.0)
    return points @ (s * s) - ratio.sum(axis=1)


def simplex_grid_oracle(n: int, eta: float, step: float = 1e-3) -> float:
    """
    Минимум δφ перебором по сетке симплекса.
    Для n = 3 сначала грубая сетка 0.01, затем уточнение шагом step около лучшей точки.
    """
    kernel = loss_kernel_matrix(n, eta)

    def best_of(points: np.ndarray) -> Tuple[np.ndarray, float]:
        fisher = batch_quantum_fisher(points, kernel)
        return points[int(np.argmax(fisher))], float(np.max(fisher))

    if n <= 2:
        total = int(round(1.0 / step))
        points = np.array(list(_grid_compositions(total, n + 1)), dtype=float) / total
        _, fisher = best_of(points)
        return 0.5 / math.sqrt(fisher)

    coarse_total = 100
    coarse = np.array(list(_grid_compositions(coarse_total, n + 1)), dtype=float) / coarse_total
    center, _ = best_of(coarse)

    offsets = np.arange(-20, 21) * step
    local = []
    for shift in itertools.product(offsets, repeat=n):
        head = center[:n] + np.array(shift)
        tail = 1.0 - head.sum()
        if np.all(head >= -1e-12) and tail >= -1e-12:
            local.append(np.append(np.clip(head, 0.0, None), max(tail, 0.0)))
    _, fisher = best_of(np.array(local))
    return 0.5 / math.sqrt(fisher)


@pytest.fixture
def grid_oracle() -> Callable[[int, float], float]:
    """Оракул перебора по симплексу весов"""
    return simplex_grid_oracle


# Настройки для различных типов тестов
def pytest_configure(config):
    """Конфигурация pytest"""
    config.addinivalue_line("markers", "unit: единичные тесты")
    config.addinivalue_line("markers", "integration: интеграционные тесты")
    config.addinivalue_line("markers", "slow: медленные тесты")
    config.addinivalue_line("markers", "quantum: квантовый оптимизатор")
    config.addinivalue_line("markers", "montecarlo: моделирование Монте-Карло")


def pytest_collection_modifyitems(config, items):
    """Автоматически помечает тесты маркерами"""
    for item in items:
        module = item.module.__name__ if item.module else ""

        if "quantum" in module or "quantum" in item.name.lower():
            item.add_marker(pytest.mark.quantum)

        if "montecarlo" in module:
            item.add_marker(pytest.mark.montecarlo)

        if "cli" in module or "report" in module:
            item.add_marker(pytest.mark.integration)
        elif not item.get_closest_marker("slow"):
            item.add_marker(pytest.mark.unit)


# Утилитарные функции для тестов
class TestDataFactory:
    """Фабрика тестовых данных"""

    @staticmethod
    def create_params(
        transmission: float = 0.5, eta: float = 1.0, phi: float = math.pi / 2, nbar: float = 100.0
    ) -> InterferometerParams:
        """Создает параметры классического эксперимента"""
        return InterferometerParams(transmission, eta, phi, nbar)

    @staticmethod
    def create_interior_weights(rng: np.random.Generator, n: int) -> WeightVector:
        """Случайная внутренняя точка симплекса"""
        return WeightVector(rng.dirichlet(np.ones(n + 1)) + 1e-3)

    @staticmethod
    def create_two_point_weights(n: int, x_n: float) -> WeightVector:
        """Веса на носителе {0, n}"""
        return WeightVector.from_support(n, {0: 1.0 - x_n, n: x_n})
