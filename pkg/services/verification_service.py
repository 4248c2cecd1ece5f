"""
Перекрестная проверка модулей: оракулы, константы, замкнутые формы,
многопроходные эквивалентности и аналитический градиент.
"""

import logging
import math
import time
import traceback
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from models import InterferometerParams, WeightVector
from services.analytic_bounds import (
    chop_optimal,
    chop_uncertainty,
    eta_zero,
    interior_k_coefficient,
    multipass_as_resource,
    multipass_optimal,
    multipass_uncertainty,
    noon_uncertainty,
    xi_constant,
)
from services.classical_interferometer import (
    fisher_analytic,
    fisher_numeric,
    optimal_transmission,
    sil_uncertainty,
)
from services.loss_kernel import loss_kernel_matrix
from services.quantum_optimizer import (
    fisher_functional,
    fisher_functional_gradient,
    noon_weights,
    optimize_weights,
    quantum_multipass_uncertainty,
    quantum_uncertainty,
    stretch_weights,
)
from utils import golden_section_search

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    """Итог одной проверки"""

    suite: str
    name: str
    passed: bool
    detail: str


def fisher_oracle_grid() -> List[InterferometerParams]:
    """Сетка 3×3×3×3 для сверки аналитической и численной информации Фишера"""
    grid = []
    for eta in (0.1, 0.6, 1.0):
        for transmission in (0.3, 0.5, optimal_transmission(eta)):
            for phi in (0.3, math.pi / 2, 2.8):
                for nbar in (1.0, 10.0, 100.0):
                    grid.append(InterferometerParams(transmission, eta, phi, nbar))
    return grid


class VerificationService:
    """Набор проверок команды verify"""

    def __init__(self, fast: bool = False, seed: int = 0) -> None:
        self.fast = fast
        self.seed = seed
        self.results: List[CheckResult] = []
        self.errors: List[str] = []
        self.checks_passed = 0
        self.checks_total = 0

    def add_error(self, suite: str, name: str, detail: str) -> None:
        """Добавить проваленную проверку"""
        self.checks_total += 1
        self.errors.append(f"{suite}: {name}: {detail}")
        self.results.append(CheckResult(suite, name, False, detail))
        logger.error(f"❌ [{suite}] {name}: {detail}")

    def add_success(self, suite: str, name: str, detail: str) -> None:
        """Добавить успешную проверку"""
        self.checks_total += 1
        self.checks_passed += 1
        self.results.append(CheckResult(suite, name, True, detail))
        logger.info(f"✅ [{suite}] {name}: {detail}")

    def expect(self, suite: str, name: str, passed: bool, detail: str) -> bool:
        if passed:
            self.add_success(suite, name, detail)
        else:
            self.add_error(suite, name, detail)
        return passed

    def check_fisher_oracle(self) -> bool:
        """Численная информация Фишера против аналитической на сетке из 81 точки"""
        worst = 0.0
        for p in fisher_oracle_grid():
            analytic = fisher_analytic(p)
            numeric = fisher_numeric(p)
            worst = max(worst, abs(numeric - analytic) / analytic)
        return self.expect("fisher", "analytic-vs-numeric", worst < 1e-8, f"макс. отн. ошибка {worst:.3e}")

    def check_constants(self) -> bool:
        """Корни η₀, u* и ξ"""
        eta0 = eta_zero()
        coefficient = interior_k_coefficient()
        xi = xi_constant()
        ok = self.expect("constants", "eta0", 0.227 <= eta0 <= 0.229, f"η₀={eta0:.9f}")
        ok &= self.expect(
            "constants", "interior-k", abs(coefficient - 1.478) < 1e-3, f"u*={coefficient:.9f}"
        )
        ok &= self.expect("constants", "xi", 0.2775 <= xi <= 0.2785, f"ξ={xi:.9f}")
        return ok

    def check_closed_forms(self) -> bool:
        """N00N на оптимальном носителе, η = 1 и совпадение n = 1 с SIL"""
        n_max = 12 if self.fast else 50
        worst = 0.0
        for eta in (0.3, 0.6, 0.9):
            for n in range(1, n_max + 1):
                expected = noon_uncertainty(n, eta)
                actual = quantum_uncertainty(noon_weights(n, eta), eta)
                worst = max(worst, abs(actual - expected) / expected)
        ok = self.expect("closed-form", "noon-support", worst < 1e-10, f"макс. отн. ошибка {worst:.3e}")

        hl_max = 6 if self.fast else 20
        worst = 0.0
        for n in range(1, hl_max + 1):
            worst = max(worst, abs(optimize_weights(n, 1.0).delta_phi - 1.0 / n))
        ok &= self.expect("closed-form", "lossless-heisenberg", worst < 1e-6, f"макс. ошибка {worst:.3e}")

        worst = 0.0
        for eta in (0.3, 0.6, 0.9):
            worst = max(worst, abs(optimize_weights(1, eta).delta_phi - sil_uncertainty(eta, 1.0)))
        ok &= self.expect("closed-form", "single-photon-sil", worst < 1e-10, f"макс. ошибка {worst:.3e}")

        worst = 0.0
        for eta in (0.3, 0.6, 0.9):
            for n in (2, 5, 10, 30):
                regime = chop_optimal(n, eta)
                grid = np.linspace(1.0, n, 2001)
                grid_best = min(chop_uncertainty(n, k, eta) for k in grid)
                worst = max(worst, regime.delta_phi - grid_best)
        ok &= self.expect("closed-form", "chop-vs-grid", worst <= 1e-9, f"превышение {worst:.3e}")

        worst = 0.0
        for eta in (0.3, 0.6, 0.9):
            optimum = multipass_optimal(100.0, eta)
            _, searched = golden_section_search(
                lambda k: multipass_uncertainty(100.0, k, eta), 1.0, 4.0 * optimum.k_opt + 1.0
            )
            worst = max(worst, abs(searched - optimum.delta_phi) / optimum.delta_phi)
        ok &= self.expect("closed-form", "multipass-golden", worst < 1e-9, f"макс. отн. ошибка {worst:.3e}")
        return ok

    def check_multipass_equivalences(self) -> bool:
        """Проходы как ресурс совпадают с нарезкой; растянутое состояние не хуже k проходов"""
        identical = all(
            multipass_as_resource(n, eta) == chop_optimal(n, eta)
            for eta in (0.1, 0.3, 0.6, 0.9)
            for n in (1, 2, 5, 30, 1000)
        )
        ok = self.expect("multipass", "resource-equals-chop", identical, "побитовое совпадение")

        worst = 0.0
        for eta in (0.3, 0.6, 0.9):
            for n in range(1, 5):
                for k in range(1, 4):
                    w = noon_weights(n, math.exp(k * math.log(eta)))
                    passes = quantum_multipass_uncertainty(w, eta, k)
                    stretched = quantum_uncertainty(stretch_weights(w, k), eta)
                    worst = max(worst, abs(passes - stretched) / passes)
        ok &= self.expect("multipass", "stretched-two-point", worst < 1e-10, f"макс. отн. ошибка {worst:.3e}")

        violations = 0
        for eta in (0.3, 0.6, 0.9):
            for n in range(1, 3 if self.fast else 5):
                for k in range(2, 4):
                    passes = optimize_weights(n, math.exp(k * math.log(eta))).delta_phi / k
                    stretched = optimize_weights(k * n, eta).delta_phi
                    if stretched > passes + 1e-9:
                        violations += 1
        ok &= self.expect(
            "multipass", "stretched-optimum", violations == 0, f"нарушений {violations}"
        )
        return ok

    def check_gradient(self) -> bool:
        """Аналитический градиент F_Q против центральных разностей"""
        rng = np.random.default_rng(self.seed)
        points = 5 if self.fast else 20
        step = 1e-6
        worst = 0.0
        for n in (2, 5, 10):
            for eta in (0.3, 0.6, 0.9):
                kernel = loss_kernel_matrix(n, eta)
                for _ in range(points):
                    x = WeightVector(rng.dirichlet(np.ones(n + 1)) + 1e-3).x
                    analytic = fisher_functional_gradient(x, kernel)
                    numeric = np.empty_like(analytic)
                    for t in range(n + 1):
                        shift = np.zeros(n + 1)
                        shift[t] = step
                        numeric[t] = (
                            fisher_functional(x + shift, kernel) - fisher_functional(x - shift, kernel)
                        ) / (2.0 * step)
                    error = np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)
                    worst = max(worst, float(error))
        return self.expect("gradient", "central-difference", worst < 1e-5, f"макс. отн. ошибка {worst:.3e}")

    def suites(self) -> List[Tuple[str, Callable[[], bool]]]:
        return [
            ("Информация Фишера", self.check_fisher_oracle),
            ("Константы", self.check_constants),
            ("Замкнутые формы", self.check_closed_forms),
            ("Многопроходные эквивалентности", self.check_multipass_equivalences),
            ("Градиент", self.check_gradient),
        ]

    def run_all_checks(self) -> bool:
        """Запуск всех проверок"""
        logger.info(f"🔍 Запуск проверок (быстрый режим: {self.fast})")
        for title, check in self.suites():
            started = time.perf_counter()
            try:
                check()
            except Exception as e:
                self.add_error(title, "exception", f"{type(e).__name__}: {e}")
                logger.debug(traceback.format_exc())
            logger.info(f"⏱ {title}: {time.perf_counter() - started:.2f} с")
        return not self.errors

    def format_summary(self) -> str:
        """Текстовый отчет для стандартного вывода"""
        lines = []
        for result in self.results:
            status = "OK" if result.passed else "ERROR"
            lines.append(f"[{status}] {result.suite}/{result.name}: {result.detail}")
        lines.append(f"Проверок пройдено: {self.checks_passed}/{self.checks_total}")
        return "\n".join(lines) + "\n"
