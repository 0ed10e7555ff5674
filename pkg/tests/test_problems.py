import numpy as np
import pytest

from eslab.problems import (
    LogisticProblem,
    QuadraticProblem,
    finite_diff_check,
    make_logistic,
    make_random_quadratic,
)


@pytest.fixture(scope="module")
def het_quadratic():
    return make_random_quadratic(5, 2, (1, 10), heterogeneity=1.0, seed=7)


@pytest.fixture(scope="module")
def logistic():
    return make_logistic(8, 4, lam=0.1, seed=3)


class TestQuadraticConstruction:
    def test_single_symmetric_component(self):
        # spectrum [2, 2] in one dimension: f(x) = x^2 + c, L = 2
        p = make_random_quadratic(1, 1, (2, 2), heterogeneity=0.0, seed=0)
        assert p.L_each.tolist() == [2.0]
        c = p.f_star
        for x in (-1.5, 0.0, 2.0):
            assert p.eval_full(np.array([x])) == pytest.approx(x**2 + c, abs=1e-14)
        assert p.delta_inf == 0.0

    def test_isotropic_gradient(self):
        # A_i = 2 I, b = 0: grad at (1, 1) is (2, 2)
        p = QuadraticProblem(spectra=[[2.0, 2.0]], lin=[[0.0, 0.0]], offsets=[0.0])
        np.testing.assert_allclose(p.grad_component(0, np.array([1.0, 1.0])), [2.0, 2.0])

    def test_homogeneous_has_zero_gap(self):
        p = make_random_quadratic(4, 3, (0.5, 4.0), heterogeneity=0.0, seed=11)
        assert p.delta_inf == 0.0
        np.testing.assert_array_equal(p.f_inf_each, np.full(4, p.f_star))

    def test_heterogeneous_gap_matches_componentwise_minimization(self, het_quadratic):
        p = het_quadratic
        assert p.delta_inf > 0
        # oracle: minimize each component through its dense matrix
        f_inf_oracle = np.empty(p.n)
        for i in range(p.n):
            A = p.component_matrix(i)
            b = p.component_linear(i)
            x_min = np.linalg.solve(A, -b)
            f_inf_oracle[i] = p.eval_component(i, x_min)
        np.testing.assert_allclose(p.f_inf_each, f_inf_oracle, rtol=1e-12)
        assert p.delta_inf == pytest.approx(p.f_star - f_inf_oracle.mean(), rel=1e-12)

    def test_smoothness_constants_are_top_eigenvalues(self, het_quadratic):
        p = het_quadratic
        for i in range(p.n):
            top = np.linalg.eigvalsh(p.component_matrix(i)).max()
            assert p.L_each[i] == pytest.approx(top, rel=1e-12)
        assert p.L_bar == pytest.approx(p.L_each.mean(), rel=1e-15)

    def test_minimizer_certificate(self, het_quadratic):
        p = het_quadratic
        assert np.linalg.norm(p.grad_full(p.x_star)) <= 1e-8
        assert p.eval_full(p.x_star) == pytest.approx(p.f_star, rel=1e-10, abs=1e-12)

    def test_rejects_negative_spectrum(self):
        with pytest.raises(ValueError, match="unbounded below"):
            make_random_quadratic(3, 2, (-1.0, 2.0), heterogeneity=0.0, seed=0)

    def test_rejects_negative_heterogeneity(self):
        with pytest.raises(ValueError):
            make_random_quadratic(3, 2, (1.0, 2.0), heterogeneity=-0.1, seed=0)


class TestLogisticConstruction:
    def test_zero_feature_closed_form(self):
        # a = 0, y = +1, lam = 1: f(x) = log 2 + x^2 / 2
        p = LogisticProblem(features=np.zeros((1, 1)), labels=np.array([1.0]), lam=1.0)
        x = np.array([0.7])
        assert p.eval_full(x) == pytest.approx(np.log(2.0) + 0.245, abs=1e-14)
        np.testing.assert_allclose(p.grad_full(x), 1.0 * x)
        assert p.f_star == pytest.approx(np.log(2.0), abs=1e-12)
        assert abs(p.x_star[0]) <= 1e-10

    def test_numeric_minimizer_reaches_tolerance(self, logistic):
        assert np.linalg.norm(logistic.grad_full(logistic.x_star)) <= 1e-8
        assert logistic.numeric_infima
        assert logistic.delta_inf >= 0

    def test_smoothness_constants(self, logistic):
        expected = 0.25 * np.sum(logistic.features**2, axis=1) + logistic.lam
        np.testing.assert_allclose(logistic.L_each, expected, rtol=1e-15)

    def test_rejects_nonpositive_ridge(self):
        with pytest.raises(ValueError):
            make_logistic(3, 2, lam=0.0, seed=0)
        with pytest.raises(ValueError):
            make_logistic(3, 2, lam=-1.0, seed=0)


class TestOracleConsistency:
    @pytest.mark.parametrize("fixture", ["het_quadratic", "logistic"])
    def test_components_stay_above_their_infima(self, fixture, request):
        p = request.getfixturevalue(fixture)
        slack = 1e-8 if p.numeric_infima else 1e-12
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.standard_normal(p.d) * 3.0
            values = p.component_values(x)
            assert np.all(values >= p.f_inf_each - slack)
            assert p.eval_full(x) >= p.f_star - slack

    @pytest.mark.parametrize("fixture", ["het_quadratic", "logistic"])
    def test_full_gradient_is_mean_of_components(self, fixture, request):
        p = request.getfixturevalue(fixture)
        rng = np.random.default_rng(6)
        for _ in range(20):
            x = rng.standard_normal(p.d)
            mean_grad = p.component_grads(x).mean(axis=0)
            full = p.grad_full(x)
            assert np.linalg.norm(full - mean_grad) <= 1e-12 * (1.0 + np.linalg.norm(full))
            f, g = p.value_and_grad(x)
            assert f == pytest.approx(p.eval_full(x), rel=1e-12, abs=1e-15)
            np.testing.assert_allclose(g, full, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("fixture", ["het_quadratic", "logistic"])
    def test_gradient_gap_inequality(self, fixture, request):
        # ||grad f||^2 <= 2 L (f - f_star) for L-smooth f bounded below
        p = request.getfixturevalue(fixture)
        slack = 1e-9 + (1e-8 if p.numeric_infima else 0.0)
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.standard_normal(p.d) * 2.0
            f, g = p.value_and_grad(x)
            assert float(g @ g) <= 2.0 * p.L_bar * (f - p.f_star) + slack

    def test_index_and_dimension_errors(self, het_quadratic):
        p = het_quadratic
        with pytest.raises(IndexError):
            p.grad_component(p.n, np.zeros(p.d))
        with pytest.raises(IndexError):
            p.eval_component(-1, np.zeros(p.d))
        with pytest.raises(ValueError):
            p.grad_full(np.zeros(p.d + 1))


class TestFiniteDifferences:
    def test_quadratic_is_exact_up_to_rounding(self, het_quadratic):
        x = np.array([0.3, -1.2])
        assert finite_diff_check(het_quadratic, x, h=1e-5) <= 1e-8

    def test_rotated_quadratic_component_gradients(self):
        p = make_random_quadratic(4, 3, (1, 6), heterogeneity=0.5, seed=13)
        assert p.rotation is not None
        rng = np.random.default_rng(1)
        x = rng.standard_normal(3)
        assert finite_diff_check(p, x, h=1e-5) <= 1e-6

    def test_logistic_tolerance(self, logistic):
        x = 0.4 * np.ones(logistic.d)
        assert finite_diff_check(logistic, x, h=1e-5) <= 1e-6

    def test_degenerate_step_rejected(self, het_quadratic):
        with pytest.raises(ValueError):
            finite_diff_check(het_quadratic, np.zeros(2), h=0.0)
