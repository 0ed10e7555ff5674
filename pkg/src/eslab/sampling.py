"""Sampling vectors, their exact moments, and expected-smoothness constants.

A sampling vector v is a random nonnegative weight vector with E[v_i] = 1
for every i; it defines the stochastic gradient

    g_v(x) = (1/n) * sum_i v_i * grad f_i(x).

Three schemes are implemented:

* ``WithReplacement(n, tau, q)``: v_i = S_i / (tau q_i) where the counts S
  come from tau categorical draws with probabilities q;
* ``IndependentBernoulli(p)``: index i is included independently with
  probability p_i, and v_i = 1/p_i when included;
* ``TauNice(n, tau)``: a uniform random subset of size tau, with weight
  n/tau on the selected indices.

Each scheme exposes its second moments E[v_i^2] and E[v_i v_j] in closed
form, closed-form expected-smoothness constants (A, B, C) built from the
problem's certified L_i and delta_inf, and an exhaustive enumeration of its
outcome space that serves as the ground-truth oracle for all of the above.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .problems import FiniteSumProblem, NUMERIC_INF_SLACK

__all__ = [
    "SamplingScheme",
    "WithReplacement",
    "IndependentBernoulli",
    "TauNice",
    "SchemeMoments",
    "ESConstants",
    "PointwiseCheck",
    "EnumerationSizeError",
    "ENUMERATION_LIMIT",
    "draw",
    "scheme_moments",
    "closed_form_es",
    "stochastic_grad",
    "exact_second_moment",
    "second_moment_from_grads",
    "enumerate_second_moment",
    "enumerate_moments",
    "outcome_count",
    "verify_es_pointwise",
]

ENUMERATION_LIMIT = 1_000_000


class EnumerationSizeError(ValueError):
    """Raised when an outcome space is too large to enumerate exactly."""

    def __init__(self, scheme, count):
        self.count = count
        super().__init__(
            f"refusing to enumerate {scheme.label()}: {count} outcomes exceed "
            f"the limit of {ENUMERATION_LIMIT}"
        )


@dataclass(frozen=True)
class SchemeMoments:
    """Second moments of a sampling vector.

    ``e_v2[i]`` is E[v_i^2] (always >= 1 since E[v_i] = 1) and ``e_vivj`` is
    the pairwise moment E[v_i v_j] for i != j, which is a single scalar for
    all three schemes because each is exchangeable over pairs.
    """

    e_v2: np.ndarray
    e_vivj: float


@dataclass(frozen=True)
class ESConstants:
    """Coefficients of E||g_v(x)||^2 <= 2A(f(x)-f_star) + B||grad f(x)||^2 + C."""

    A: float
    B: float
    C: float

    def __post_init__(self):
        if self.A < 0 or self.B < 0 or self.C < 0:
            raise ValueError("expected-smoothness constants must be nonnegative")

    def rhs(self, subopt: float, grad_sq: float) -> float:
        return 2.0 * self.A * subopt + self.B * grad_sq + self.C


@dataclass(frozen=True)
class PointwiseCheck:
    lhs: float
    rhs: float
    holds: bool


class SamplingScheme:
    """Shared surface of the three schemes."""

    n: int

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """One sampling vector."""
        return self.draw_many(rng, 1)[0]

    def draw_many(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """(m, n) array of independent sampling vectors."""
        raise NotImplementedError

    def moments(self) -> SchemeMoments:
        raise NotImplementedError

    def outcome_count(self) -> int:
        raise NotImplementedError

    def outcomes(self):
        """Yields (probability, v) over the whole outcome space."""
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError

    def _checked_outcomes(self):
        count = self.outcome_count()
        if count > ENUMERATION_LIMIT:
            raise EnumerationSizeError(self, count)
        return self.outcomes()


@dataclass(frozen=True, eq=False)
class WithReplacement(SamplingScheme):
    """Mini-batch of size tau drawn with replacement from probabilities q.

    Categorical draws use inverse-CDF lookup on the cumulative q table with
    ties resolved toward the lower index, so draws are reproducible given
    the generator state.
    """

    n: int
    tau: int
    q: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tau", int(self.tau))
        q = np.array(self.q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError("q must have shape (n,)")
        if self.tau < 1:
            raise ValueError("tau must be at least 1")
        if np.any(q <= 0):
            raise ValueError("q: all probabilities must be positive")
        if abs(float(q.sum()) - 1.0) > 1e-12:
            raise ValueError("q: probabilities must sum to 1 within 1e-12")
        q.setflags(write=False)
        cum = np.cumsum(q)
        cum[-1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "_cum", cum)

    def draw_many(self, rng, m):
        u = rng.random((int(m), self.tau))
        idx = np.searchsorted(self._cum, u, side="left")
        flat = idx + self.n * np.arange(int(m))[:, None]
        counts = np.bincount(flat.ravel(), minlength=int(m) * self.n).reshape(int(m), self.n)
        return counts / (self.tau * self.q)

    def moments(self):
        e_v2 = 1.0 - 1.0 / self.tau + 1.0 / (self.tau * self.q)
        return SchemeMoments(e_v2=e_v2, e_vivj=1.0 - 1.0 / self.tau)

    def outcome_count(self):
        return math.comb(self.tau + self.n - 1, self.n - 1)

    def outcomes(self):
        tau_fact = math.factorial(self.tau)
        for counts in _compositions(self.tau, self.n):
            coef = tau_fact
            for c in counts:
                coef //= math.factorial(c)
            prob = float(coef) * float(np.prod(self.q ** np.asarray(counts)))
            v = np.asarray(counts, dtype=float) / (self.tau * self.q)
            yield prob, v

    def label(self):
        return f"with_replacement(tau={self.tau})"


@dataclass(frozen=True, eq=False)
class IndependentBernoulli(SamplingScheme):
    """Each index included independently with probability p_i, weight 1/p_i."""

    p: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a nonempty vector")
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError("p: inclusion probabilities must lie in (0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", int(p.size))

    def draw_many(self, rng, m):
        mask = rng.random((int(m), self.n)) < self.p
        return mask / self.p

    def moments(self):
        return SchemeMoments(e_v2=1.0 / self.p, e_vivj=1.0)

    def outcome_count(self):
        return 2**self.n

    def outcomes(self):
        for bits in itertools.product((0, 1), repeat=self.n):
            mask = np.asarray(bits, dtype=float)
            prob = float(np.prod(np.where(mask == 1.0, self.p, 1.0 - self.p)))
            if prob == 0.0:
                continue
            yield prob, mask / self.p

    def label(self):
        return "independent(p={})".format(",".join(f"{x:g}" for x in self.p))


@dataclass(frozen=True)
class TauNice(SamplingScheme):
    """Uniform random subset of size tau without replacement, weight n/tau.

    Subsets are drawn by a partial Fisher-Yates shuffle; tau = n is the
    deterministic full batch and consumes no randomness.
    """

    n: int
    tau: int

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tau", int(self.tau))
        if not 1 <= self.tau <= self.n:
            raise ValueError("tau must satisfy 1 <= tau <= n")

    def draw_many(self, rng, m):
        m = int(m)
        if self.tau == self.n:
            return np.ones((m, self.n))
        idx = np.tile(np.arange(self.n), (m, 1))
        rows = np.arange(m)
        for i in range(self.tau):
            j = rng.integers(i, self.n, size=m)
            picked = idx[rows, j]
            idx[rows, j] = idx[rows, i]
            idx[rows, i] = picked
        v = np.zeros((m, self.n))
        v[rows[:, None], idx[:, : self.tau]] = self.n / self.tau
        return v

    def moments(self):
        e_v2 = np.full(self.n, self.n / self.tau)
        if self.n == 1:
            e_vivj = 1.0  # no pairs exist; value is never consumed
        else:
            e_vivj = self.n * (self.tau - 1) / (self.tau * (self.n - 1))
        return SchemeMoments(e_v2=e_v2, e_vivj=e_vivj)

    def outcome_count(self):
        return math.comb(self.n, self.tau)

    def outcomes(self):
        prob = 1.0 / math.comb(self.n, self.tau)
        for subset in itertools.combinations(range(self.n), self.tau):
            v = np.zeros(self.n)
            v[list(subset)] = self.n / self.tau
            yield prob, v

    def label(self):
        return f"tau_nice(tau={self.tau})"


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# -- module-level operations -----------------------------------------------


def draw(scheme: SamplingScheme, rng: np.random.Generator) -> np.ndarray:
    return scheme.draw(rng)


def scheme_moments(scheme: SamplingScheme) -> SchemeMoments:
    return scheme.moments()


def closed_form_es(
    scheme: SamplingScheme,
    problem: FiniteSumProblem,
    proposition_body: bool = False,
) -> ESConstants:
    """Closed-form (A, B, C) for the scheme on the given problem.

    For ``WithReplacement`` the default A is max_i L_i / (tau * n * q_i),
    the value the moment expansion actually yields; ``proposition_body``
    switches to the alternative (1/tau) * max_i L_i / q_i form, which is a
    factor n larger, for comparison only.
    """
    if scheme.n != problem.n:
        raise ValueError("scheme and problem disagree on the component count")
    L = problem.L_each
    if isinstance(scheme, WithReplacement):
        if proposition_body:
            a = float(np.max(L / scheme.q)) / scheme.tau
        else:
            a = float(np.max(L / (scheme.tau * scheme.n * scheme.q)))
        b = 1.0 - 1.0 / scheme.tau
    elif isinstance(scheme, IndependentBernoulli):
        a = float(np.max((1.0 - scheme.p) * L / (scheme.p * scheme.n)))
        b = 1.0
    elif isinstance(scheme, TauNice):
        if scheme.tau == scheme.n:
            a, b = 0.0, 1.0  # deterministic full batch
        else:
            a = (scheme.n - scheme.tau) / (scheme.tau * (scheme.n - 1)) * float(np.max(L))
            b = scheme.n * (scheme.tau - 1) / (scheme.tau * (scheme.n - 1))
    else:
        raise TypeError(f"unknown scheme type {type(scheme).__name__}")
    return ESConstants(A=a, B=b, C=2.0 * a * problem.delta_inf)


def stochastic_grad(problem: FiniteSumProblem, v: np.ndarray, x) -> np.ndarray:
    """(1/n) * sum_i v_i grad f_i(x), evaluating only components with v_i != 0."""
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.n,):
        raise ValueError(f"sampling vector must have shape ({problem.n},), got {v.shape}")
    nz = np.flatnonzero(v)
    if nz.size == 0:
        return np.zeros(problem.d)
    grads = problem.component_grads(x, indices=nz)
    return (v[nz] @ grads) / problem.n


def second_moment_from_grads(scheme: SamplingScheme, grads: np.ndarray) -> float:
    """E||g_v||^2 from precomputed component gradients (rows of ``grads``)."""
    m = scheme.moments()
    sq = np.einsum("ij,ij->i", grads, grads)
    total = grads.sum(axis=0)
    cross = float(total @ total) - float(sq.sum())
    return (float(m.e_v2 @ sq) + m.e_vivj * cross) / scheme.n**2


def exact_second_moment(problem: FiniteSumProblem, scheme: SamplingScheme, x) -> float:
    """Exact E||g_v(x)||^2 via the closed-form scheme moments."""
    if scheme.n != problem.n:
        raise ValueError("scheme and problem disagree on the component count")
    return second_moment_from_grads(scheme, problem.component_grads(x))


def enumerate_second_moment(problem: FiniteSumProblem, scheme: SamplingScheme, x) -> float:
    """Exact E||g_v(x)||^2 by summing over every scheme outcome."""
    if scheme.n != problem.n:
        raise ValueError("scheme and problem disagree on the component count")
    grads = problem.component_grads(x)
    terms = []
    for prob, v in scheme._checked_outcomes():
        g = (v @ grads) / scheme.n
        terms.append(prob * float(g @ g))
    return math.fsum(terms)


def enumerate_moments(scheme: SamplingScheme):
    """(E[v], E[v^2], E[v_i v_j] matrix) by exhaustive enumeration."""
    n = scheme.n
    e_v = np.zeros(n)
    e_vv = np.zeros((n, n))
    for prob, v in scheme._checked_outcomes():
        e_v += prob * v
        e_vv += prob * np.outer(v, v)
    return e_v, np.diag(e_vv).copy(), e_vv


def outcome_count(scheme: SamplingScheme) -> int:
    return scheme.outcome_count()


def verify_es_pointwise(problem: FiniteSumProblem, scheme: SamplingScheme, x) -> PointwiseCheck:
    """Check the expected-smoothness inequality at one point.

    The left side is the exact second moment; the right side uses the
    closed-form constants. Numeric-infimum problems get extra absolute
    slack on top of the 1e-9 relative tolerance.
    """
    es = closed_form_es(scheme, problem)
    lhs = exact_second_moment(problem, scheme, x)
    f, g = problem.value_and_grad(x)
    rhs = es.rhs(f - problem.f_star, float(g @ g))
    slack = 1e-9 * (1.0 + abs(rhs))
    if problem.numeric_infima:
        slack += NUMERIC_INF_SLACK
    return PointwiseCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + slack))
