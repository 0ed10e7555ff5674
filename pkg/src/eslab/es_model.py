"""Fitting expected-smoothness coefficients to measured data, plus the
pointwise identities that make the measurements trustworthy.

One regression row relates the measured (or exact) second moment to the
model 2*A*subopt + B*grad_sq + C. Fits are weighted nonnegative least
squares over the columns (2*subopt, grad_sq, 1), so the recovered triple is
directly comparable to the closed-form constants. Windowed fits over a
trajectory expose how the coefficients drift between the early
suboptimality-dominated phase and the late geometry-dominated phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nnls import nnls
from .problems import FiniteSumProblem, NUMERIC_INF_SLACK
from .sampling import ESConstants, SamplingScheme

__all__ = [
    "ESSample",
    "ESFit",
    "WindowFit",
    "VarianceCheck",
    "GapCheck",
    "fit_es",
    "windowed_fit",
    "variance_identity_check",
    "minibatch_es_rhs",
    "grad_gap_check",
    "samples_from_trajectory",
]

COEFFICIENT_NAMES = ("A", "B", "C")


@dataclass(frozen=True)
class ESSample:
    """One regression row: suboptimality, squared gradient norm, measured
    second moment, and an inverse-variance weight (1 for exact values)."""

    subopt: float
    grad_sq: float
    second_moment: float
    weight: float = 1.0

    def __post_init__(self):
        vals = (self.subopt, self.grad_sq, self.second_moment, self.weight)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("sample fields must be finite")
        if min(vals) < 0:
            raise ValueError("sample fields must be nonnegative")


@dataclass(frozen=True)
class ESFit:
    """Fitted nonnegative triple with diagnostics.

    ``residuals`` are predicted minus measured per sample. ``r_squared``
    uses the weighted total sum of squares about the weighted mean and is
    reported even when negative (possible under the nonnegativity
    constraints). ``rank_deficient`` marks a design whose free columns do
    not fully determine the triple; ``pinned`` lists the coefficients held
    at zero by the constraint.
    """

    A_hat: float
    B_hat: float
    C_hat: float
    r_squared: float
    residuals: np.ndarray
    sample_count: int
    rank_deficient: bool
    pinned: tuple[str, ...]

    def rhs(self, subopt, grad_sq):
        return 2.0 * self.A_hat * subopt + self.B_hat * grad_sq + self.C_hat


@dataclass(frozen=True)
class WindowFit:
    start: int
    fit: ESFit


@dataclass(frozen=True)
class VarianceCheck:
    variance_direct: float
    variance_via_decomposition: float
    max_diff: float


@dataclass(frozen=True)
class GapCheck:
    lhs: float
    rhs: float
    holds: bool


def _design(samples):
    X = np.array([[2.0 * s.subopt, s.grad_sq, 1.0] for s in samples])
    y = np.array([s.second_moment for s in samples])
    w = np.array([s.weight for s in samples])
    return X, y, w


def fit_es(samples) -> ESFit:
    """Weighted NNLS fit of (A, B, C) to the given samples.

    Columns are normalized before the active-set solve and denormalized
    after, since suboptimality and gradient norms can differ by many orders
    of magnitude along a trajectory. Requires at least 3 samples;
    rank-deficient designs are flagged, with coefficients still returned.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise ValueError(f"need at least 3 samples to fit 3 coefficients, got {len(samples)}")
    X, y, w = _design(samples)
    sqrtw = np.sqrt(w)
    Xw = X * sqrtw[:, None]
    yw = y * sqrtw

    col_norm = np.linalg.norm(Xw, axis=0)
    scale = np.where(col_norm > 0, col_norm, 1.0)
    theta_scaled, _ = nnls(Xw / scale, yw)
    theta = theta_scaled / scale

    pinned = tuple(COEFFICIENT_NAMES[j] for j in range(3) if theta[j] == 0.0)
    free = [j for j in range(3) if theta[j] > 0.0]
    rank_deficient = bool(
        np.any(col_norm == 0)
        or np.linalg.matrix_rank(Xw) < 3
        or (free and np.linalg.matrix_rank(Xw[:, free]) < len(free))
    )

    predicted = X @ theta
    residuals = predicted - y
    rss = float(w @ residuals**2)
    y_mean = float(w @ y) / float(w.sum()) if w.sum() > 0 else float(y.mean())
    tss = float(w @ (y - y_mean) ** 2)
    r_squared = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else math.nan)

    return ESFit(
        A_hat=float(theta[0]),
        B_hat=float(theta[1]),
        C_hat=float(theta[2]),
        r_squared=r_squared,
        residuals=residuals,
        sample_count=len(samples),
        rank_deficient=rank_deficient,
        pinned=pinned,
    )


def windowed_fit(samples, window: int, stride: int, steps=None) -> list[WindowFit]:
    """One fit per window [j, j+window) of the sample sequence.

    ``steps`` optionally maps sample positions to trajectory steps; window
    starts are reported in those units. Degenerate windows carry the
    rank-deficiency flag on their fit rather than raising.
    """
    samples = list(samples)
    if window < 3:
        raise ValueError("window must cover at least 3 samples")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if len(samples) < window:
        raise ValueError(f"trajectory provides {len(samples)} samples, shorter than window {window}")
    if steps is None:
        steps = list(range(len(samples)))
    elif len(steps) != len(samples):
        raise ValueError("steps must align with samples")
    out = []
    for j in range(0, len(samples) - window + 1, stride):
        out.append(WindowFit(start=int(steps[j]), fit=fit_es(samples[j : j + window])))
    return out


def samples_from_trajectory(trajectory, f_star: float, use_exact: bool = False) -> list[ESSample]:
    """Regression rows from a trajectory's probe records.

    Monte Carlo weights are the inverse squared probe standard errors, with
    the standard error floored at its 5th percentile so a few ultra-precise
    probes cannot dominate the fit; exact second moments get weight 1.
    """
    if trajectory.probe_steps.size == 0:
        raise ValueError("trajectory carries no probe records")
    idx = trajectory.probe_steps
    subopt = np.maximum(trajectory.f[idx] - f_star, 0.0)
    grad_sq = trajectory.grad_norm_sq[idx]
    if use_exact:
        values = trajectory.probe_exact
        weights = np.ones_like(values)
    else:
        values = trajectory.probe_estimate
        se = trajectory.probe_se.copy()
        positive = se[se > 0]
        if positive.size:
            se = np.maximum(se, np.percentile(positive, 5.0))
            weights = 1.0 / se**2
        else:
            weights = np.ones_like(values)
    return [
        ESSample(subopt=float(s), grad_sq=float(g), second_moment=float(v), weight=float(w))
        for s, g, v, w in zip(subopt, grad_sq, values, weights)
    ]


def variance_identity_check(problem: FiniteSumProblem, scheme: SamplingScheme, x) -> VarianceCheck:
    """Both sides of E||g - grad f||^2 = E||g||^2 - ||grad f||^2 by enumeration."""
    grads = problem.component_grads(x)
    full = grads.mean(axis=0)
    direct_terms, moment_terms = [], []
    for prob, v in scheme._checked_outcomes():
        g = (v @ grads) / scheme.n
        dev = g - full
        direct_terms.append(prob * float(dev @ dev))
        moment_terms.append(prob * float(g @ g))
    direct = math.fsum(direct_terms)
    via = math.fsum(moment_terms) - float(full @ full)
    return VarianceCheck(
        variance_direct=direct,
        variance_via_decomposition=via,
        max_diff=abs(direct - via),
    )


def minibatch_es_rhs(es: ESConstants, tau: int, subopt: float, grad_sq: float) -> float:
    """Second-moment bound for a mini-batch averaging tau independent vectors:

        (2A/tau) * subopt + (1 + (B-1)/tau) * grad_sq + C/tau.

    At tau = 1 this is the single-sample bound; as tau grows it tends to
    grad_sq.
    """
    tau = int(tau)
    if tau < 1:
        raise ValueError("tau must be at least 1")
    return (
        2.0 * es.A / tau * subopt
        + (1.0 + (es.B - 1.0) / tau) * grad_sq
        + es.C / tau
    )


def grad_gap_check(problem: FiniteSumProblem, x) -> GapCheck:
    """Smoothness gap inequality ||grad f(x)||^2 <= 2 L (f(x) - f_star)."""
    f, g = problem.value_and_grad(x)
    lhs = float(g @ g)
    rhs = 2.0 * problem.L_bar * (f - problem.f_star)
    slack = 1e-9 * (1.0 + abs(rhs))
    if problem.numeric_infima:
        slack += NUMERIC_INF_SLACK
    return GapCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + slack))
