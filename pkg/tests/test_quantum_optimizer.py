import math
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import TestDataFactory
from exceptions import ConsistencyError, ConvergenceError, DomainError, UnboundedImprovementError
from models import WeightVector
from services.analytic_bounds import (
    chop_optimal,
    multipass_optimal_integer,
    noon_uncertainty,
)
from services.classical_interferometer import sil_uncertainty
from services.loss_kernel import loss_kernel_matrix
from services.quantum_optimizer import (
    QuantumWeightOptimizer,
    default_pass_limit,
    fisher_functional,
    fisher_functional_gradient,
    noon_restricted_optimum,
    noon_weights,
    optimize_multipass,
    optimize_weights,
    project_to_simplex,
    quantum_fisher,
    quantum_multipass_uncertainty,
    quantum_uncertainty,
    stretch_weights,
)


class TestQuantumUncertainty:
    """Тесты функционала квантовой неопределенности"""

    def test_single_photon_lossless(self):
        """Тест: n = 1, x = (½, ½), η = 1 дает δφ = 1"""
        assert quantum_uncertainty(WeightVector([0.5, 0.5]), 1.0) == pytest.approx(1.0)

    def test_two_point_example(self):
        """Тест: n = 2, x₀ = x₂ = ½, η = 0.6"""
        w = WeightVector([0.5, 0.0, 0.5])
        a = 0.6**2
        expected = 0.5 / math.sqrt(4 * a * 0.25 / (a * 0.5 + 0.5))
        assert quantum_uncertainty(w, 0.6) == pytest.approx(expected, rel=1e-12)
        assert quantum_uncertainty(w, 0.6) == pytest.approx(0.68718, abs=1e-5)

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    def test_noon_support_reproduces_closed_form(self, eta):
        """Тест: оптимальный N00N-носитель воспроизводит замкнутую форму"""
        for n in range(1, 51):
            value = quantum_uncertainty(noon_weights(n, eta), eta)
            assert value == pytest.approx(noon_uncertainty(n, eta), rel=1e-10)

    def test_noon_support_deep_in_loss(self):
        """Тест: при η = 0.3 и n до 60 δφ конечна и совпадает с замкнутой формой"""
        for n in range(40, 61):
            value = quantum_uncertainty(noon_weights(n, 0.3), 0.3)
            assert math.isfinite(value)
            assert value == pytest.approx(noon_uncertainty(n, 0.3), rel=1e-10)

    def test_point_mass_has_no_information(self):
        """Тест: состояние с одним числом фотонов не несет информации о фазе"""
        w = WeightVector.from_support(3, {2: 1.0})
        assert fisher_functional(w.x, loss_kernel_matrix(3, 0.7)) == 0.0
        assert math.isinf(quantum_uncertainty(w, 0.7))

    def test_single_support_branches_are_exact_zero(self):
        """Тест: ветви с одним числом фотонов дают точный ноль, а не шум округления"""
        n = 46
        kernel = loss_kernel_matrix(n, 0.3)
        x = noon_weights(n, 0.3).x
        a = x[0] * x[n] * kernel[n, 0] / (x[0] + x[n] * kernel[n, 0])
        assert fisher_functional(x, kernel) == pytest.approx(n * n * a, rel=1e-13)

    def test_variance_form_matches_direct_form(self, rng):
        """Тест: дисперсионная форма равна Σ s²x − Σ N²/D"""
        kernel = loss_kernel_matrix(8, 0.45)
        x = TestDataFactory.create_interior_weights(rng, 8).x
        s = np.arange(9.0)
        direct = float(x @ (s * s) - np.sum(((x * s) @ kernel) ** 2 / (x @ kernel)))
        assert fisher_functional(x, kernel) == pytest.approx(direct, rel=1e-10)

    def test_fisher_is_homogeneous(self, rng):
        """Тест: F_Q однородна первой степени по x"""
        kernel = loss_kernel_matrix(5, 0.6)
        x = TestDataFactory.create_interior_weights(rng, 5).x
        assert fisher_functional(3.0 * x, kernel) == pytest.approx(3.0 * fisher_functional(x, kernel))
        assert float(x @ fisher_functional_gradient(x, kernel)) == pytest.approx(
            fisher_functional(x, kernel), rel=1e-12
        )

    def test_large_n_stays_finite(self):
        """Тест: при n = 300 ядро и функционал остаются конечными"""
        w = WeightVector.uniform(300)
        assert math.isfinite(quantum_uncertainty(w, 0.5))
        assert quantum_fisher(w, 0.5) > 0.0


class TestMultipassUncertainty:
    """Тесты многопроходного функционала"""

    def test_single_pass_is_identity(self, rng):
        """Тест: k = 1 совпадает с однопроходным значением"""
        w = TestDataFactory.create_interior_weights(rng, 4)
        assert quantum_multipass_uncertainty(w, 0.6, 1) == quantum_uncertainty(w, 0.6)

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_lossless_divides_by_k(self, rng, k):
        """Тест: без потерь δφ делится на k"""
        w = TestDataFactory.create_interior_weights(rng, 3)
        assert quantum_multipass_uncertainty(w, 1.0, k) == pytest.approx(
            quantum_uncertainty(w, 1.0) / k, rel=1e-12
        )

    def test_single_photon_five_passes(self):
        """Тест: n = 1, оптимальные веса, η = 0.6, k = 5"""
        eta_k = 0.6**5
        w = noon_weights(1, eta_k)
        expected = (1 + 0.6**2.5) / (2 * 5 * 0.6**2.5)
        assert quantum_multipass_uncertainty(w, 0.6, 5) == pytest.approx(expected, rel=1e-10)
        assert quantum_multipass_uncertainty(w, 0.6, 5) == pytest.approx(0.45861, abs=1e-5)

    def test_non_integer_k_rejected(self):
        """Тест: нецелое k отклоняется"""
        with pytest.raises(DomainError):
            quantum_multipass_uncertainty(WeightVector.uniform(2), 0.6, 1.5)

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_stretched_two_point_state_equals_passes(self, n, k, eta):
        """Тест: растянутое двухточечное состояние эквивалентно k проходам"""
        for x_n in (0.3, 0.5, 0.8):
            w = TestDataFactory.create_two_point_weights(n, x_n)
            passes = quantum_multipass_uncertainty(w, eta, k)
            stretched = quantum_uncertainty(stretch_weights(w, k), eta)
            assert stretched == pytest.approx(passes, rel=1e-10)

    def test_stretch_layout(self):
        """Тест: вес x_s переносится в индекс ks"""
        stretched = stretch_weights(WeightVector([0.2, 0.3, 0.5]), 3)
        assert stretched.n == 6
        np.testing.assert_allclose(stretched.x, [0.2, 0, 0, 0.3, 0, 0, 0.5])


class TestSimplexProjection:
    """Тесты проекции на симплекс"""

    def test_point_on_simplex_is_fixed(self):
        """Тест: точка симплекса не меняется"""
        x = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(project_to_simplex(x), x, atol=1e-15)

    def test_projection_properties(self, rng):
        """Тест: результат неотрицателен, сумма 1, ближе любой вершины"""
        for _ in range(20):
            y = rng.normal(size=6) * 3
            p = project_to_simplex(y)
            assert np.all(p >= 0.0)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
            for vertex in np.eye(6):
                assert np.linalg.norm(y - p) <= np.linalg.norm(y - vertex) + 1e-12

    def test_simple_case(self):
        """Тест: проекция (2, 0) равна (1, 0)"""
        np.testing.assert_allclose(project_to_simplex(np.array([2.0, 0.0])), [1.0, 0.0])

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_non_finite_input(self, bad):
        """Тест: inf и nan на входе дают ConsistencyError, а не IndexError"""
        with pytest.raises(ConsistencyError):
            project_to_simplex(np.array([0.5, bad, 0.1]))


class TestGradient:
    """Тесты аналитического градиента"""

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_gradient_matches_central_differences(self, rng, n, eta):
        """Тест: градиент совпадает с центральными разностями"""
        kernel = loss_kernel_matrix(n, eta)
        step = 1e-6
        for _ in range(20):
            x = TestDataFactory.create_interior_weights(rng, n).x
            analytic = fisher_functional_gradient(x, kernel)
            numeric = np.empty(n + 1)
            for t in range(n + 1):
                shift = np.zeros(n + 1)
                shift[t] = step
                numeric[t] = (
                    fisher_functional(x + shift, kernel) - fisher_functional(x - shift, kernel)
                ) / (2 * step)
            error = np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)
            assert error < 1e-5


class TestWeightOptimizer:
    """Тесты оптимизатора весов"""

    @pytest.mark.parametrize("n", [1, 2, 5, 10, 20])
    def test_lossless_optimum_is_noon(self, n):
        """Тест: без потерь оптимум это N00N с x₀ = x_n = ½ и δφ = 1/n"""
        optimum = optimize_weights(n, 1.0)
        assert optimum.delta_phi == pytest.approx(1.0 / n, abs=1e-6)
        assert optimum.weights.x[0] == pytest.approx(0.5, abs=1e-4)
        assert optimum.weights.x[-1] == pytest.approx(0.5, abs=1e-4)

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    def test_single_photon_equals_sil(self, eta):
        """Тест: при n = 1 оптимум совпадает с SIL при n̄ = 1"""
        optimum = optimize_weights(1, eta)
        assert optimum.delta_phi == pytest.approx(sil_uncertainty(eta, 1.0), abs=1e-10)
        assert optimum.weights.x[1] == pytest.approx(1 / (1 + math.sqrt(eta)), abs=1e-6)

    def test_self_consistency(self):
        """Тест: δφ оптимума равна функционалу от его весов"""
        optimum = optimize_weights(6, 0.7)
        assert optimum.delta_phi == pytest.approx(
            quantum_uncertainty(optimum.weights, 0.7), abs=1e-12
        )
        assert optimum.solver_report.starts == 4

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [2, 5, 12])
    def test_dominates_noon_restricted(self, n, eta):
        """Тест: оптимум не хуже N00N-носителя"""
        assert optimize_weights(n, eta).delta_phi <= noon_restricted_optimum(n, eta).delta_phi + 1e-12

    def test_two_photon_below_noon(self):
        """Тест: n = 2, η = 0.6 не хуже 2/3"""
        assert optimize_weights(2, 0.6).delta_phi <= 0.66667

    @pytest.mark.slow
    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_grid_oracle(self, grid_oracle, n, eta):
        """Тест: совпадение с перебором по сетке симплекса"""
        optimum = optimize_weights(n, eta)
        oracle = grid_oracle(n, eta)
        assert optimum.delta_phi <= oracle + 1e-12
        assert oracle - optimum.delta_phi < 1e-4

    def test_invalid_tolerance(self):
        """Тест: допуск вне [1e-12, 1e-4] отклоняется"""
        with pytest.raises(DomainError):
            optimize_weights(3, 0.6, tol=1e-2)

    def test_iteration_cap_raises_with_best_iterate(self):
        """Тест: при исчерпании итераций ошибка несет лучшую точку"""
        optimizer = QuantumWeightOptimizer(tol=1e-12, max_iterations=1, extra_starts=0)
        with pytest.raises(ConvergenceError) as exc_info:
            optimizer.optimize(8, 0.6)
        assert exc_info.value.best_weights is not None
        assert len(exc_info.value.best_weights) == 9
        assert math.isfinite(exc_info.value.best_delta_phi)

    @pytest.mark.parametrize("n,eta", [(20, 0.6**3), (30, 0.3), (10, 0.6**7), (12, 0.6**11)])
    def test_strong_loss(self, n, eta):
        """Тест: при малой F_Q оптимизатор сходится к конечному δφ между 1/n и N00N"""
        optimum = optimize_weights(n, eta)
        report = optimum.solver_report
        assert report.converged
        assert report.multistart_spread <= 1e-8
        assert math.isfinite(optimum.delta_phi)
        assert 1.0 / n <= optimum.delta_phi <= noon_uncertainty(n, eta) * (1 + 1e-8)

    def test_starts_agree(self):
        """Тест: разброс стартов не больше 10·tol"""
        report = optimize_weights(6, 0.7).solver_report
        assert 0.0 <= report.multistart_spread <= 10 * 1e-9

    def test_disagreeing_starts_raise(self, monkeypatch):
        """Тест: расхождение сошедшихся стартов больше 10·tol вызывает ConsistencyError"""
        optimizer = QuantumWeightOptimizer(extra_starts=1)
        fisher_values = iter([1.0, 1.1])

        def ascend(x0, kernel):
            return SimpleNamespace(x=x0, fisher=next(fisher_values), iterations=1, stationarity=0.0, converged=True)

        monkeypatch.setattr(optimizer, "_ascend", ascend)
        with pytest.raises(ConsistencyError):
            optimizer.optimize(3, 0.6)


class TestNoonRestricted:
    """Тесты оптимума на носителе {0, n}"""

    @pytest.mark.parametrize("eta", [0.36, 0.6, 0.9, 1.0])
    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_matches_closed_form(self, n, eta):
        """Тест: совпадение с замкнутой формой N00N"""
        optimum = noon_restricted_optimum(n, eta)
        assert optimum.delta_phi == pytest.approx(noon_uncertainty(n, eta), rel=1e-10)

    def test_lossless_weight(self):
        """Тест: без потерь x_n = ½"""
        assert noon_restricted_optimum(4, 1.0).weights.x[-1] == pytest.approx(0.5, abs=1e-6)

    def test_two_photon_weight(self):
        """Тест: n = 2, η = 0.36 дает x₂ = 1/(1+0.36)"""
        optimum = noon_restricted_optimum(2, 0.36)
        assert optimum.weights.x[2] == pytest.approx(1 / 1.36, abs=1e-6)
        assert optimum.weights.x[2] == pytest.approx(0.7353, abs=1e-4)


class TestMultipassOptimizer:
    """Тесты оптимизации по числу проходов"""

    def test_default_pass_limit(self):
        """Тест: предел проходов по умолчанию при η = 0.6"""
        assert default_pass_limit(0.6) == 11

    def test_single_photon(self):
        """Тест: n = 1, η = 0.6 дает k = 5"""
        optimum = optimize_multipass(1, 0.6)
        assert optimum.k == 5
        assert optimum.delta_phi == pytest.approx(0.458609, abs=1e-5)
        assert optimum.delta_phi == pytest.approx(multipass_optimal_integer(1.0, 0.6).delta_phi, rel=1e-9)

    @pytest.mark.parametrize("n", [1, 3])
    def test_lossless_with_cap(self, n):
        """Тест: без потерь оптимум на границе k_max"""
        optimum = optimize_multipass(n, 1.0, k_max=10)
        assert optimum.k == 10
        assert optimum.delta_phi == pytest.approx(1 / (10 * n), abs=1e-7)

    def test_lossless_without_cap_raises(self):
        """Тест: без потерь и без k_max возбуждается ошибка"""
        with pytest.raises(UnboundedImprovementError):
            optimize_multipass(3, 1.0)

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [1, 4, 10])
    def test_never_worse_than_single_pass(self, n, eta):
        """Тест: перебор k включает k = 1"""
        assert optimize_multipass(n, eta).delta_phi <= optimize_weights(n, eta).delta_phi + 1e-12

    def test_mid_size_resource(self):
        """Тест: n = 12, η = 0.6 проходит весь перебор k ≤ 11 без сбоев"""
        optimum = optimize_multipass(12, 0.6)
        assert 1 <= optimum.k <= default_pass_limit(0.6)
        assert math.isfinite(optimum.delta_phi)
        assert optimum.delta_phi <= optimize_weights(12, 0.6).delta_phi + 1e-12
        assert optimum.delta_phi <= multipass_optimal_integer(12.0, 0.6).delta_phi + 1e-9
        assert optimum.delta_phi == pytest.approx(
            quantum_multipass_uncertainty(optimum.weights, 0.6, optimum.k), rel=1e-12
        )

    @pytest.mark.slow
    def test_largest_default_resource(self):
        """Тест: n = 30, η = 0.6 дает конечный оптимум не хуже однопроходного"""
        optimum = optimize_multipass(30, 0.6)
        assert math.isfinite(optimum.delta_phi)
        assert optimum.delta_phi <= optimize_weights(30, 0.6).delta_phi + 1e-12

    def test_self_consistency(self):
        """Тест: δφ равна многопроходному функционалу от весов"""
        optimum = optimize_multipass(3, 0.6)
        assert optimum.delta_phi == pytest.approx(
            quantum_multipass_uncertainty(optimum.weights, 0.6, optimum.k), abs=1e-12
        )

    def test_relaxed_k_diagnostic(self):
        """Тест: вещественное k оценивается только по запросу"""
        assert optimize_multipass(1, 0.6).k_relaxed is None
        relaxed = optimize_multipass(1, 0.6, relaxed_k=True).k_relaxed
        assert relaxed == pytest.approx(5.0055, abs=0.05)

    @pytest.mark.parametrize("eta", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("k", [2, 3])
    def test_stretched_optimum_not_worse(self, n, k, eta):
        """Тест: однопроходное оптимальное kn-фотонное состояние не хуже k проходов"""
        passes = optimize_weights(n, eta**k).delta_phi / k
        assert optimize_weights(k * n, eta).delta_phi <= passes + 1e-9


class TestStrategyOrdering:
    """Тесты упорядочения стратегий при η = 0.6"""

    @pytest.mark.slow
    def test_quantum_below_classical(self):
        """Тест: Q ≤ CHOP ≤ SIL и QMP ≤ MP для n ≤ 30"""
        for n in range(1, 31):
            q = optimize_weights(n, 0.6).delta_phi
            chop = chop_optimal(n, 0.6).delta_phi
            assert q <= chop + 1e-9
            assert chop <= sil_uncertainty(0.6, n) + 1e-12

            qmp = optimize_multipass(n, 0.6).delta_phi
            assert qmp <= multipass_optimal_integer(float(n), 0.6).delta_phi + 1e-9

    def test_small_n_below_heisenberg(self):
        """Тест: QMP ниже 1/n при n ≤ 5"""
        for n in range(1, 6):
            assert optimize_multipass(n, 0.6).delta_phi < 1.0 / n
