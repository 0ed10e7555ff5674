import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eslab.problems import make_logistic, make_random_quadratic
from eslab.sampling import (
    EnumerationSizeError,
    IndependentBernoulli,
    TauNice,
    WithReplacement,
    closed_form_es,
    enumerate_moments,
    enumerate_second_moment,
    exact_second_moment,
    outcome_count,
    scheme_moments,
    stochastic_grad,
    verify_es_pointwise,
)


def small_schemes(n, rng):
    yield TauNice(n, 1)
    yield TauNice(n, min(2, n))
    yield TauNice(n, n)
    q = rng.uniform(0.5, 2.0, n)
    yield WithReplacement(n, 2, q / q.sum())
    yield WithReplacement(n, 1, np.full(n, 1.0 / n))
    if n <= 4:
        yield IndependentBernoulli(rng.uniform(0.2, 1.0, n))


@pytest.fixture(scope="module")
def quadratic():
    return make_random_quadratic(4, 3, (1, 5), heterogeneity=1.0, seed=2)


class TestMoments:
    def test_tau_nice_closed_form_values(self):
        m = scheme_moments(TauNice(3, 2))
        np.testing.assert_allclose(m.e_v2, 1.5, rtol=0, atol=0)
        assert m.e_vivj == 0.75

    def test_tau_nice_enumeration_confirms(self):
        # 3 subsets of size 2, each weight 1/3: E[v^2] = (9/4)(2/3), E[vv] = (9/4)(1/3)
        e_v, e_v2, e_vv = enumerate_moments(TauNice(3, 2))
        np.testing.assert_allclose(e_v, 1.0, atol=1e-15)
        np.testing.assert_allclose(e_v2, 1.5, atol=1e-15)
        np.testing.assert_allclose(e_vv[0, 1], 0.75, atol=1e-15)

    def test_certain_inclusion_is_deterministic(self):
        m = scheme_moments(IndependentBernoulli(np.ones(3)))
        np.testing.assert_array_equal(m.e_v2, np.ones(3))
        assert m.e_vivj == 1.0

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_closed_forms_match_enumeration(self, n):
        rng = np.random.default_rng(n)
        for scheme in small_schemes(n, rng):
            m = scheme_moments(scheme)
            e_v, e_v2, e_vv = enumerate_moments(scheme)
            np.testing.assert_allclose(e_v, 1.0, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(e_v2, m.e_v2, rtol=1e-12)
            off_diag = e_vv[~np.eye(n, dtype=bool)]
            np.testing.assert_allclose(off_diag, m.e_vivj, rtol=1e-12, atol=1e-12)
            assert np.all(m.e_v2 >= 1.0 - 1e-15)  # Jensen: E[v^2] >= (E[v])^2 = 1

    def test_outcome_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        for scheme in small_schemes(4, rng):
            total = math.fsum(p for p, _ in scheme.outcomes())
            assert total == pytest.approx(1.0, abs=1e-13)

    def test_outcome_counts(self):
        assert outcome_count(TauNice(5, 2)) == 10
        assert outcome_count(IndependentBernoulli(np.full(4, 0.5))) == 16
        assert outcome_count(WithReplacement(2, 2, np.array([0.5, 0.5]))) == 3

    def test_enumeration_refusal_names_the_count(self):
        big = IndependentBernoulli(np.full(30, 0.5))
        with pytest.raises(EnumerationSizeError) as err:
            enumerate_moments(big)
        assert err.value.count == 2**30
        assert str(2**30) in str(err.value)


class TestDraws:
    def test_full_batch_is_all_ones(self):
        rng = np.random.default_rng(0)
        v = TauNice(5, 5).draw(rng)
        np.testing.assert_array_equal(v, np.ones(5))

    def test_certain_inclusion_is_all_ones(self):
        rng = np.random.default_rng(0)
        v = IndependentBernoulli(np.ones(4)).draw(rng)
        np.testing.assert_array_equal(v, np.ones(4))

    def test_tau_nice_support(self):
        rng = np.random.default_rng(3)
        v = TauNice(6, 2).draw_many(rng, 500)
        assert np.all(np.sum(v > 0, axis=1) == 2)
        assert set(np.unique(v)) == {0.0, 3.0}

    def test_with_replacement_counts_sum_to_tau(self):
        q = np.array([0.1, 0.2, 0.3, 0.4])
        scheme = WithReplacement(4, 3, q)
        rng = np.random.default_rng(4)
        v = scheme.draw_many(rng, 500)
        counts = v * (3 * q)
        np.testing.assert_allclose(counts.sum(axis=1), 3.0, atol=1e-12)

    def test_single_draw_with_replacement_unbiased_monte_carlo(self):
        # 1e6 draws: empirical E[v_i] within 0.01 of 1
        scheme = WithReplacement(4, 1, np.full(4, 0.25))
        rng = np.random.default_rng(5)
        total = np.zeros(4)
        draws = 1_000_000
        for _ in range(10):
            total += scheme.draw_many(rng, draws // 10).sum(axis=0)
        np.testing.assert_allclose(total / draws, 1.0, atol=0.01)

    @pytest.mark.parametrize("make", [
        lambda: TauNice(4, 2),
        lambda: WithReplacement(4, 2, np.array([0.1, 0.2, 0.3, 0.4])),
        lambda: IndependentBernoulli(np.array([0.3, 0.6, 0.9, 1.0])),
    ])
    def test_empirical_second_moment_matches_exact(self, make, quadratic):
        # draw-law check: MC second moment agrees with the closed form
        scheme = make()
        x = np.array([1.0, -0.5, 0.25])
        exact = exact_second_moment(quadratic, scheme, x)
        rng = np.random.default_rng(8)
        grads = quadratic.component_grads(x)
        weights = scheme.draw_many(rng, 40_000)
        vals = np.einsum("ij,ij->i", weights @ grads, weights @ grads) / quadratic.n**2
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - exact) <= 4.0 * se

    def test_scheme_validation(self):
        with pytest.raises(ValueError, match="q"):
            WithReplacement(3, 2, np.array([0.5, 0.2, 0.2]))
        with pytest.raises(ValueError, match="p"):
            IndependentBernoulli(np.array([0.5, 0.0]))
        with pytest.raises(ValueError, match="p"):
            IndependentBernoulli(np.array([0.5, 1.2]))
        with pytest.raises(ValueError, match="tau"):
            TauNice(3, 4)
        with pytest.raises(ValueError, match="tau"):
            TauNice(3, 0)


class TestClosedFormConstants:
    def test_full_batch_constants(self, quadratic):
        es = closed_form_es(TauNice(4, 4), quadratic)
        assert (es.A, es.B, es.C) == (0.0, 1.0, 0.0)

    def test_single_sample_tau_nice(self):
        p = make_random_quadratic(10, 3, (1, 8), heterogeneity=1.0, seed=9)
        es = closed_form_es(TauNice(10, 1), p)
        max_l = float(p.L_each.max())
        assert es.A == pytest.approx(max_l, rel=1e-15)
        assert es.B == 0.0
        assert es.C == pytest.approx(2.0 * max_l * p.delta_inf, rel=1e-15)

    def test_with_replacement_uniform_single_draw(self, quadratic):
        scheme = WithReplacement(4, 1, np.full(4, 0.25))
        es = closed_form_es(scheme, quadratic)
        assert es.A == pytest.approx(float(quadratic.L_each.max()), rel=1e-15)
        assert es.B == 0.0
        # the alternative form from the statement body is a factor n larger
        body = closed_form_es(scheme, quadratic, proposition_body=True)
        assert body.A == pytest.approx(4.0 * es.A, rel=1e-12)

    def test_baseline_scales_with_heterogeneity_gap(self, quadratic):
        for scheme in (TauNice(4, 2), IndependentBernoulli(np.full(4, 0.5))):
            es = closed_form_es(scheme, quadratic)
            assert es.C == pytest.approx(2.0 * es.A * quadratic.delta_inf, rel=1e-15)

    def test_tau_nice_dominance_in_batch_size(self):
        p = make_random_quadratic(8, 2, (1, 4), heterogeneity=0.7, seed=21)
        values = [closed_form_es(TauNice(8, tau), p).A for tau in range(1, 9)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_mismatched_sizes_rejected(self, quadratic):
        with pytest.raises(ValueError):
            closed_form_es(TauNice(5, 2), quadratic)


class TestStochasticGradient:
    def test_all_ones_recovers_full_gradient(self, quadratic):
        x = np.array([0.2, 0.4, -0.6])
        np.testing.assert_allclose(
            stochastic_grad(quadratic, np.ones(4), x), quadratic.grad_full(x), rtol=1e-14
        )

    def test_single_sample_selects_one_component(self, quadratic):
        x = np.array([1.0, 0.0, -1.0])
        v = np.zeros(4)
        v[2] = 4.0  # tau-nice(1) weight n/tau
        np.testing.assert_allclose(
            stochastic_grad(quadratic, v, x), quadratic.grad_component(2, x), rtol=1e-14
        )

    def test_enumeration_mean_is_unbiased(self, quadratic):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(3)
        full = quadratic.grad_full(x)
        for scheme in small_schemes(4, rng):
            mean = np.zeros(3)
            for prob, v in scheme.outcomes():
                mean += prob * stochastic_grad(quadratic, v, x)
            assert np.linalg.norm(mean - full) <= 1e-12 * (1.0 + np.linalg.norm(full))

    def test_dimension_mismatch(self, quadratic):
        with pytest.raises(ValueError):
            stochastic_grad(quadratic, np.ones(5), np.zeros(3))


class TestSecondMoments:
    def test_full_batch_equals_full_gradient_norm(self, quadratic):
        x = np.array([0.4, 0.8, -0.3])
        full_sq = float(quadratic.grad_full(x) @ quadratic.grad_full(x))
        assert exact_second_moment(quadratic, TauNice(4, 4), x) == pytest.approx(full_sq, rel=1e-14)

    def test_uniform_single_draw_averages_component_norms(self, quadratic):
        # E[v_i^2] = n and E[v_i v_j] = 0 reduce the expansion to the mean norm
        x = np.array([1.0, -0.7, 0.2])
        scheme = WithReplacement(4, 1, np.full(4, 0.25))
        grads = quadratic.component_grads(x)
        expected = float(np.mean(np.einsum("ij,ij->i", grads, grads)))
        assert exact_second_moment(quadratic, scheme, x) == pytest.approx(expected, rel=1e-13)
        assert enumerate_second_moment(quadratic, scheme, x) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_matches_enumeration_on_random_points(self, n):
        problem = make_random_quadratic(n, 3, (0.5, 6.0), heterogeneity=1.0, seed=n)
        rng = np.random.default_rng(100 + n)
        for scheme in small_schemes(n, rng):
            for _ in range(5):
                x = rng.standard_normal(3)
                a = exact_second_moment(problem, scheme, x)
                b = enumerate_second_moment(problem, scheme, x)
                assert abs(a - b) <= 1e-12 * (1.0 + abs(b))

    @given(
        n=st.integers(min_value=2, max_value=5),
        tau=st.integers(min_value=1, max_value=5),
        seed=st.integers(min_value=0, max_value=999),
    )
    @settings(max_examples=25, deadline=None)
    def test_tau_nice_property(self, n, tau, seed):
        tau = min(tau, n)
        problem = make_random_quadratic(n, 2, (0.5, 3.0), heterogeneity=0.8, seed=seed)
        x = np.random.default_rng(seed).standard_normal(2)
        scheme = TauNice(n, tau)
        a = exact_second_moment(problem, scheme, x)
        b = enumerate_second_moment(problem, scheme, x)
        assert abs(a - b) <= 1e-12 * (1.0 + abs(b))


class TestPointwiseInequality:
    def test_full_batch_is_equality(self, quadratic):
        x = np.array([0.9, -0.2, 0.5])
        check = verify_es_pointwise(quadratic, TauNice(4, 4), x)
        assert check.holds
        assert check.lhs == pytest.approx(check.rhs, rel=1e-12)

    def test_interpolation_point_is_tight_zero(self):
        p = make_random_quadratic(4, 2, (1, 3), heterogeneity=0.0, seed=3)
        check = verify_es_pointwise(p, TauNice(4, 1), p.x_star)
        assert check.holds
        assert check.lhs <= 1e-18
        assert check.rhs <= 1e-18

    @pytest.mark.parametrize("problem_seed", [1, 2])
    def test_holds_on_random_sweep(self, problem_seed):
        problem = make_random_quadratic(5, 3, (0.5, 5.0), heterogeneity=1.5, seed=problem_seed)
        rng = np.random.default_rng(problem_seed)
        schemes = [
            TauNice(5, 2),
            WithReplacement(5, 2, np.full(5, 0.2)),
            IndependentBernoulli(np.full(5, 0.4)),
        ]
        for scheme in schemes:
            for _ in range(100):
                x = 3.0 * rng.standard_normal(3)
                assert verify_es_pointwise(problem, scheme, x).holds

    def test_holds_for_numeric_infima(self):
        problem = make_logistic(5, 3, lam=0.2, seed=4)
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = rng.standard_normal(3)
            assert verify_es_pointwise(problem, TauNice(5, 2), x).holds
