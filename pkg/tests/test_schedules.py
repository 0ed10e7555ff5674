import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eslab.schedules import (
    Constant,
    Cosine,
    Harmonic,
    Polynomial,
    admissible,
    partial_sums,
    schedule_values,
    step_size,
)

ALL_SCHEDULES = [
    Constant(0.1),
    Harmonic(0.5),
    Polynomial(0.2, 0.75),
    Cosine(0.3, horizon=1000),
]


class TestStepSizes:
    def test_cosine_endpoints(self):
        sched = Cosine(0.4, horizon=50)
        assert step_size(sched, 0) == pytest.approx(0.4)
        assert step_size(sched, 50) == pytest.approx(0.0, abs=1e-17)

    def test_cosine_rejects_past_horizon(self):
        with pytest.raises(ValueError):
            step_size(Cosine(0.4, horizon=50), 51)

    def test_polynomial_quarter_step(self):
        # (3+1)^(-1/2) = 1/2
        assert step_size(Polynomial(0.1, 0.5), 3) == pytest.approx(0.05)

    def test_harmonic(self):
        assert step_size(Harmonic(1.0), 0) == 1.0
        assert step_size(Harmonic(1.0), 9) == pytest.approx(0.1)

    @pytest.mark.parametrize("sched", ALL_SCHEDULES)
    def test_negative_index_rejected(self, sched):
        with pytest.raises(ValueError):
            step_size(sched, -1)

    @pytest.mark.parametrize("sched", ALL_SCHEDULES)
    def test_values_match_step_size_and_never_increase(self, sched):
        vals = schedule_values(sched, 200)
        for k in (0, 1, 17, 199):
            assert vals[k] == pytest.approx(step_size(sched, k), rel=1e-15)
        assert np.all(np.diff(vals) <= 1e-16)
        assert sched.eta_max == sched.eta
        assert vals[0] <= sched.eta_max

    def test_validation(self):
        with pytest.raises(ValueError):
            Constant(0.0)
        with pytest.raises(ValueError):
            Polynomial(0.1, 1.0)
        with pytest.raises(ValueError):
            Polynomial(0.1, 0.0)
        with pytest.raises(ValueError):
            Cosine(0.1, horizon=0)


class TestPartialSums:
    def test_constant_closed_form(self):
        s, ssq = partial_sums(Constant(0.1), 100)
        assert s == pytest.approx(10.0, rel=1e-12)
        assert ssq == pytest.approx(100 * 0.1**2, rel=1e-12)

    def test_harmonic_two_steps(self):
        s, ssq = partial_sums(Harmonic(1.0), 2)
        assert s == pytest.approx(1.5, rel=1e-15)
        assert ssq == pytest.approx(1.25, rel=1e-15)

    def test_cosine_closed_forms(self):
        # sum eta_k = eta (K+1)/2 and sum eta_k^2 = eta^2 (3K/8 + 1/2) exactly
        eta, K = 0.7, 500
        s, ssq = partial_sums(Cosine(eta, horizon=K), K)
        assert s == pytest.approx(eta * (K + 1) / 2.0, rel=1e-12)
        assert ssq == pytest.approx(eta**2 * (3.0 * K / 8.0 + 0.5), rel=1e-12)

    def test_cosine_ratio_targets(self):
        eta, K = 1.0, 10_000
        s, ssq = partial_sums(Cosine(eta, horizon=K), K)
        assert 0.499 <= s / (K * eta) <= 0.501
        assert 0.374 <= ssq / (K * eta**2) <= 0.376

    def test_cosine_partial_sums_limited_by_horizon(self):
        with pytest.raises(ValueError):
            partial_sums(Cosine(0.1, horizon=10), 11)

    def test_harmonic_euler_mascheroni(self):
        eta, K = 1.0, 1_000_000
        s, _ = partial_sums(Harmonic(eta), K)
        assert abs(s / eta - math.log(K) - np.euler_gamma) <= 0.01

    @given(
        idx=st.integers(min_value=0, max_value=3),
        k1=st.integers(min_value=1, max_value=400),
        k2=st.integers(min_value=1, max_value=400),
    )
    @settings(max_examples=40, deadline=None)
    def test_additivity_over_ranges(self, idx, k1, k2):
        sched = ALL_SCHEDULES[idx]
        lo, hi = sorted((k1, k2))
        if lo == hi:
            hi += 1
        vals = schedule_values(sched, hi)
        s_all, ssq_all = partial_sums(sched, hi)
        s_head = math.fsum(vals[:lo])
        s_tail = math.fsum(vals[lo:])
        assert s_head + s_tail == pytest.approx(s_all, rel=1e-12)
        ssq_head = math.fsum(vals[:lo] ** 2)
        ssq_tail = math.fsum(vals[lo:] ** 2)
        assert ssq_head + ssq_tail == pytest.approx(ssq_all, rel=1e-12)


class TestAdmissibility:
    def test_below_ceiling(self):
        assert admissible(Constant(0.9), L=2.0, B=1.0)

    def test_boundary_is_excluded(self):
        assert not admissible(Constant(1.0), L=2.0, B=1.0)

    def test_zero_b_is_vacuous(self):
        assert admissible(Constant(1e9), L=2.0, B=0.0)

    def test_requires_positive_smoothness(self):
        with pytest.raises(ValueError):
            admissible(Constant(0.1), L=0.0, B=1.0)
