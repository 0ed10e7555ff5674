"""Convergence-bound evaluation, rate predictions, and slope fitting.

The central object is the bound on the minimum expected squared gradient
norm of SGD after K steps under the expected-smoothness condition with an
admissible schedule (eta_max < 2/(L*B)):

    min_k E||grad f(x_k)||^2
      <= 2 (f(x_0) - f_star) / (D * sum eta_k)                   (term 1)
       + (2 L A / D) * sum(eta_k^2 E[f_k - f_star]) / sum eta_k  (term 2)
       + (L C / D) * sum(eta_k^2) / sum eta_k                    (term 3)

with D = 2 - L B eta_max. Term 2 is evaluated with the per-step ensemble
means of f_k - f_star; the coarser variant that replaces every E[f_k -
f_star] by f(x_0) - f_star is also reported, and is the quantity whose
K-dependence the schedule-specific rate predictions describe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .optimizer import EnsembleTrajectory
from .sampling import ESConstants
from .schedules import Constant, Cosine, Harmonic, Polynomial, StepSchedule, partial_sums, schedule_values

__all__ = [
    "BoundReport",
    "RatePrediction",
    "RateFit",
    "SumAsymptoticsRow",
    "DescentCheck",
    "min_grad_bound",
    "min_grad_bound_coarse",
    "check_bound",
    "predicted_rate",
    "fit_rate",
    "estimate_floor",
    "fit_rate_subtracting_floor",
    "sum_asymptotics_check",
    "descent_step_check",
    "schedule_kind",
]

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class BoundReport:
    """One bound evaluation: measured left side vs the three-term right side.

    ``lhs`` is min over k of the ensemble-mean squared gradient norm;
    ``slack`` is the statistical allowance (3 standard errors plus any
    numeric-infimum slack) used for ``holds``. ``rhs_total_coarse`` replaces
    the per-step suboptimality means by their step-0 value.
    """

    lhs: float
    rhs_terms: tuple[float, float, float]
    rhs_total: float
    rhs_total_coarse: float
    eta_max: float
    margin: float
    slack: float
    holds: bool


@dataclass(frozen=True)
class RatePrediction:
    """Predicted decay of the bound with the horizon K.

    ``exponent`` is the power of K; ``has_floor`` marks the K-independent
    residual proportional to eta (constant and cosine schedules);
    ``log_factor`` marks a logarithmic correction. The harmonic schedule
    carries two candidate forms, the power law with a log factor and the
    pure inverse-log decay stored in ``alternate``; which one the data
    matches is resolved empirically, not assumed.
    """

    schedule_kind: str
    exponent: float
    has_floor: bool
    log_factor: bool = False
    alternate: str | None = None


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class SumAsymptoticsRow:
    steps: int
    sum_exact: float
    sum_predicted: float
    sum_ratio: float
    sumsq_exact: float
    sumsq_predicted: float
    sumsq_ratio: float


@dataclass(frozen=True)
class DescentCheck:
    lhs: float
    rhs: float
    holds: bool


def schedule_kind(schedule: StepSchedule) -> str:
    return {
        Constant: "constant",
        Harmonic: "harmonic",
        Polynomial: "polynomial",
        Cosine: "cosine",
    }[type(schedule)]


def _denominator(es: ESConstants, L: float, schedule: StepSchedule) -> float:
    denom = 2.0 - L * es.B * schedule.eta_max
    if denom <= 0:
        raise ValueError(
            f"schedule with eta_max={schedule.eta_max:g} is inadmissible for "
            f"L={L:g}, B={es.B:g} (denominator {denom:g} <= 0)"
        )
    return denom


def min_grad_bound(
    ensemble: EnsembleTrajectory,
    es: ESConstants,
    L: float,
    schedule: StepSchedule,
    steps: int,
) -> tuple[tuple[float, float, float], float, float]:
    """(three terms, total, coarse total) of the bound after ``steps`` steps.

    The ensemble supplies the per-step means E[f_k - f_star] consumed by
    term 2. Raises for inadmissible schedules (nonpositive denominator) and
    for a horizon mismatch.
    """
    steps = int(steps)
    if steps != ensemble.steps:
        raise ValueError(f"bound horizon {steps} does not match ensemble horizon {ensemble.steps}")
    denom = _denominator(es, L, schedule)
    etas = schedule_values(schedule, steps)
    sum_eta = math.fsum(etas)
    sum_eta_sq = math.fsum(etas * etas)
    subopt0 = float(ensemble.mean_subopt[0])

    term1 = 2.0 * subopt0 / (denom * sum_eta)
    weighted = math.fsum(etas * etas * ensemble.mean_subopt[:steps])
    term2 = 2.0 * L * es.A / denom * weighted / sum_eta
    term2_coarse = 2.0 * L * es.A / denom * subopt0 * sum_eta_sq / sum_eta
    term3 = L * es.C / denom * sum_eta_sq / sum_eta
    terms = (term1, term2, term3)
    return terms, math.fsum(terms), math.fsum((term1, term2_coarse, term3))


def min_grad_bound_coarse(
    subopt0: float, es: ESConstants, L: float, schedule: StepSchedule, steps: int
) -> float:
    """Bound value with every E[f_k - f_star] replaced by its step-0 value.

    This variant depends on the data only through f(x_0) - f_star, so it is
    the deterministic curve whose K-dependence the rate predictions of
    :func:`predicted_rate` describe.
    """
    denom = _denominator(es, L, schedule)
    sum_eta, sum_eta_sq = partial_sums(schedule, int(steps))
    return (
        2.0 * subopt0 / (denom * sum_eta)
        + (2.0 * L * es.A * subopt0 + L * es.C) / denom * sum_eta_sq / sum_eta
    )


def check_bound(
    ensemble: EnsembleTrajectory,
    es: ESConstants,
    L: float,
    schedule: StepSchedule,
    steps: int,
    extra_slack: float = 0.0,
) -> BoundReport:
    """Bound evaluation with a statistical verdict.

    ``holds`` allows three standard errors of the ensemble gradient means
    (the bound concerns exact expectations; a finite ensemble needs
    tolerance) plus ``extra_slack`` for numeric infima.
    """
    terms, total, total_coarse = min_grad_bound(ensemble, es, L, schedule, steps)
    lhs = float(ensemble.mean_grad_norm_sq.min())
    slack = 3.0 * float(ensemble.se_grad_norm_sq.max()) + float(extra_slack)
    return BoundReport(
        lhs=lhs,
        rhs_terms=terms,
        rhs_total=total,
        rhs_total_coarse=total_coarse,
        eta_max=schedule.eta_max,
        margin=total - lhs,
        slack=slack,
        holds=bool(lhs <= total + slack),
    )


def predicted_rate(kind: str, alpha: float | None = None) -> RatePrediction:
    """Schedule-specific decay prediction for the bound curve."""
    if kind == "constant":
        return RatePrediction(kind, exponent=-1.0, has_floor=True)
    if kind == "harmonic":
        return RatePrediction(
            kind,
            exponent=-1.0,
            has_floor=False,
            log_factor=True,
            alternate="inverse-log: value ~ 1/log(K)",
        )
    if kind == "polynomial":
        if alpha is None or not 0.0 < alpha < 1.0:
            raise ValueError("polynomial prediction needs alpha in (0, 1)")
        return RatePrediction(kind, exponent=-(1.0 - alpha), has_floor=False)
    if kind == "cosine":
        return RatePrediction(kind, exponent=-1.0, has_floor=True)
    raise ValueError(f"unknown schedule kind {kind!r}")


def fit_rate(curve, floor: float = 0.0) -> RateFit:
    """Least-squares slope of log(value - floor) against log K.

    ``curve`` is a sequence of (K, value) pairs with at least 4 distinct K
    spanning at least 1.5 decades (with a little tolerance so grids rounded
    to integers qualify). Values must stay positive after the floor is
    subtracted.
    """
    ks = np.array([float(k) for k, _ in curve])
    vals = np.array([float(v) for _, v in curve])
    if np.unique(ks).size < 4:
        raise ValueError("need at least 4 distinct horizons to fit a slope")
    span = math.log10(ks.max() / ks.min())
    if span < 1.5 - 0.01:
        raise ValueError(f"horizons span {span:.2f} decades; need at least 1.5")
    shifted = vals - floor
    if np.any(shifted <= 0):
        raise ValueError("values must be positive after floor subtraction")
    logk = np.log(ks)
    logv = np.log(shifted)
    slope, intercept = np.polyfit(logk, logv, 1)
    fitted = slope * logk + intercept
    tss = float(np.sum((logv - logv.mean()) ** 2))
    rss = float(np.sum((logv - fitted) ** 2))
    r_squared = 1.0 - rss / tss if tss > 0 else 1.0
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


def estimate_floor(values) -> float:
    """Mean of the last 20% of values (at least one), the curve's asymptote."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("no values to estimate a floor from")
    tail = max(1, math.ceil(0.2 * len(vals)))
    return sum(vals[-tail:]) / tail


def fit_rate_subtracting_floor(curve) -> tuple[RateFit, float]:
    """Floor-then-fit workflow for curves with a K-independent residual.

    The floor is estimated from the last 20% of the K-grid (curve sorted by
    K) and the slope is fitted on the remaining points only, which keeps the
    floor-defining values out of the logarithm.
    """
    curve = sorted(((float(k), float(v)) for k, v in curve), key=lambda kv: kv[0])
    tail = max(1, math.ceil(0.2 * len(curve)))
    if len(curve) - tail < 4:
        raise ValueError("not enough points left after floor estimation")
    floor = estimate_floor([v for _, v in curve])
    return fit_rate(curve[: len(curve) - tail], floor=floor), floor


def _predicted_sums(kind, steps, eta, alpha):
    if kind == "constant":
        return steps * eta, steps * eta**2
    if kind == "harmonic":
        return eta * (math.log(steps) + EULER_GAMMA), eta**2 * math.pi**2 / 6.0
    if kind == "polynomial":
        s = eta / (1.0 - alpha) * (steps ** (1.0 - alpha) - 1.0)
        if alpha < 0.5:
            ssq = eta**2 / (1.0 - 2.0 * alpha) * (steps ** (1.0 - 2.0 * alpha) - 1.0)
        elif alpha == 0.5:
            ssq = eta**2 * (math.log(steps) + EULER_GAMMA)
        else:
            ssq = eta**2 * float(zeta(2.0 * alpha))
        return s, ssq
    if kind == "cosine":
        return steps * eta / 2.0, 3.0 * steps * eta**2 / 8.0
    raise ValueError(f"unknown schedule kind {kind!r}")


def sum_asymptotics_check(kind, steps_grid, eta=1.0, alpha=None) -> list[SumAsymptoticsRow]:
    """Exact partial sums against their closed-form approximations.

    Returns one row per K in the increasing grid; the ratios tend to 1.
    Cosine schedules are rebuilt per K since their horizon is K itself.
    """
    grid = [int(k) for k in steps_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("the K grid must be strictly increasing")
    if kind == "polynomial" and (alpha is None or not 0.0 < alpha < 1.0):
        raise ValueError("polynomial schedules need alpha in (0, 1)")
    rows = []
    for steps in grid:
        if kind == "constant":
            schedule = Constant(eta)
        elif kind == "harmonic":
            schedule = Harmonic(eta)
        elif kind == "polynomial":
            schedule = Polynomial(eta, alpha)
        elif kind == "cosine":
            schedule = Cosine(eta, horizon=steps)
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")
        s_exact, ssq_exact = partial_sums(schedule, steps)
        s_pred, ssq_pred = _predicted_sums(kind, steps, eta, alpha)
        rows.append(
            SumAsymptoticsRow(
                steps=steps,
                sum_exact=s_exact,
                sum_predicted=s_pred,
                sum_ratio=s_exact / s_pred,
                sumsq_exact=ssq_exact,
                sumsq_predicted=ssq_pred,
                sumsq_ratio=ssq_exact / ssq_pred,
            )
        )
    return rows


def descent_step_check(problem, scheme, x, eta: float) -> DescentCheck:
    """One-step expected descent at a frozen point, by enumeration.

    Compares the exact E[f(x - eta * g_v)] with

        f(x) - eta (1 - L B eta / 2) ||grad f||^2
             + L A eta^2 (f(x) - f_star) + L eta^2 C / 2

    using the closed-form constants; the inequality holds for any
    enumerable scheme on an L-smooth problem.
    """
    from .sampling import closed_form_es  # local import to avoid cycle at module load

    es = closed_form_es(scheme, problem)
    L = problem.L_bar
    f, g = problem.value_and_grad(x)
    gnsq = float(g @ g)
    grads = problem.component_grads(x)
    terms = []
    for prob, v in scheme._checked_outcomes():
        step = (v @ grads) / scheme.n
        terms.append(prob * problem.eval_full(x - eta * step))
    lhs = math.fsum(terms)
    rhs = (
        f
        - eta * (1.0 - L * es.B * eta / 2.0) * gnsq
        + L * es.A * eta**2 * (f - problem.f_star)
        + L * eta**2 * es.C / 2.0
    )
    slack = 1e-9 * (1.0 + abs(rhs))
    if problem.numeric_infima:
        slack += 1e-8
    return DescentCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + slack))
