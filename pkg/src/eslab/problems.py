"""Finite-sum objectives with certified smoothness constants and infima.

A problem is f(x) = (1/n) * sum_i f_i(x) together with exact gradient
oracles and the ground-truth quantities every downstream check consumes:
per-component smoothness constants L_i, component infima, the global
infimum f_star (with a minimizer when known), and the heterogeneity gap
delta_inf = f_star - mean_i(inf f_i) >= 0.

Two families are provided:

* quadratics with a diagonal spectrum per component (optionally conjugated
  by a shared seeded rotation), where every certified quantity is closed
  form, and
* ridge-regularized logistic losses on synthetic data, where the infima
  are computed numerically and the problem is flagged so that inequality
  checks add a small absolute slack.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

__all__ = [
    "FiniteSumProblem",
    "QuadraticProblem",
    "LogisticProblem",
    "make_random_quadratic",
    "make_logistic",
    "finite_diff_check",
]

# Numeric infima are located to this gradient norm; checks against them get
# NUMERIC_INF_SLACK of absolute headroom.
GRAD_TOL = 1e-10
NUMERIC_INF_SLACK = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class FiniteSumProblem:
    """Base class: holds certified constants, derives full-objective oracles.

    Subclasses implement the vectorized component oracles
    :meth:`component_values` and :meth:`component_grads`; everything else
    (full objective, full gradient, per-index accessors) is derived here.
    Instances are immutable after construction and safe to share across
    workers.
    """

    kind = "abstract"

    def __init__(self, n, d, L_each, f_inf_each, f_star, x_star, numeric_infima):
        self.n = int(n)
        self.d = int(d)
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        self.L_each = _readonly(L_each)
        self.f_inf_each = _readonly(f_inf_each)
        self.f_star = float(f_star)
        self.x_star = None if x_star is None else _readonly(x_star)
        self.numeric_infima = bool(numeric_infima)
        if self.L_each.shape != (self.n,) or self.f_inf_each.shape != (self.n,):
            raise ValueError("L_each and f_inf_each must have shape (n,)")
        if np.any(self.L_each <= 0):
            raise ValueError("all component smoothness constants must be positive")

    # -- certified derived quantities -------------------------------------

    @property
    def L_bar(self) -> float:
        """Smoothness constant of the full objective, (1/n) * sum_i L_i."""
        return float(np.mean(self.L_each))

    @property
    def delta_inf(self) -> float:
        """Average gap f_star - (1/n) * sum_i inf f_i; zero iff interpolation."""
        return self.f_star - float(np.mean(self.f_inf_each))

    # -- component oracles (subclass surface) ------------------------------

    def component_values(self, x, indices=None) -> np.ndarray:
        raise NotImplementedError

    def component_grads(self, x, indices=None) -> np.ndarray:
        raise NotImplementedError

    # -- derived oracles ----------------------------------------------------

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected point of shape ({self.d},), got {x.shape}")
        return x

    def _check_index(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        return i

    def eval_component(self, i, x) -> float:
        return float(self.component_values(x, indices=[self._check_index(i)])[0])

    def grad_component(self, i, x) -> np.ndarray:
        return self.component_grads(x, indices=[self._check_index(i)])[0]

    def eval_full(self, x) -> float:
        return float(np.mean(self.component_values(x)))

    def grad_full(self, x) -> np.ndarray:
        return self.component_grads(x).mean(axis=0)

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        """(f(x), grad f(x)) in one call; subclasses share intermediates."""
        return self.eval_full(x), self.grad_full(x)

    def label(self) -> str:
        return f"{self.kind}(n={self.n},d={self.d})"


class QuadraticProblem(FiniteSumProblem):
    """f_i(x) = 0.5 x^T A_i x + b_i^T x + c_i with A_i = R diag(s_i) R^T.

    The spectrum rows ``spectra`` and the linear terms ``lin`` live in the
    rotated eigenbasis (b_i = R lin_i), so L_i = max_j spectra[i, j] exactly
    and all infima are closed form. ``rotation=None`` means R = I.
    """

    kind = "quadratic"

    def __init__(self, spectra, lin, offsets, rotation=None):
        spectra = np.array(spectra, dtype=float)
        lin = np.array(lin, dtype=float)
        offsets = np.array(offsets, dtype=float)
        if spectra.ndim != 2 or lin.shape != spectra.shape or offsets.shape != (spectra.shape[0],):
            raise ValueError("spectra and lin must be (n, d), offsets (n,)")
        n, d = spectra.shape
        if np.any(spectra < 0):
            raise ValueError("spectrum entries must be nonnegative (components would be unbounded below)")
        if np.any((spectra == 0) & (lin != 0)):
            raise ValueError("linear term outside the range of a singular component")
        if rotation is not None:
            rotation = np.array(rotation, dtype=float)
            if rotation.shape != (d, d):
                raise ValueError("rotation must be (d, d)")
            if not np.allclose(rotation @ rotation.T, np.eye(d), atol=1e-10):
                raise ValueError("rotation must be orthogonal")

        # Component infima in closed form: minimize each rotated coordinate.
        ratio = np.where(spectra > 0, lin**2 / np.where(spectra > 0, spectra, 1.0), 0.0)
        f_inf_each = offsets - 0.5 * ratio.sum(axis=1)

        s_mean = spectra.mean(axis=0)
        lin_mean = lin.mean(axis=0)
        c_mean = float(offsets.mean())
        y_star = np.where(s_mean > 0, -lin_mean / np.where(s_mean > 0, s_mean, 1.0), 0.0)
        f_star = c_mean + 0.5 * float((s_mean * y_star) @ y_star) + float(lin_mean @ y_star)
        x_star = y_star if rotation is None else rotation @ y_star

        super().__init__(
            n=n,
            d=d,
            L_each=spectra.max(axis=1),
            f_inf_each=f_inf_each,
            f_star=f_star,
            x_star=x_star,
            numeric_infima=False,
        )
        self.spectra = _readonly(spectra)
        self.lin = _readonly(lin)
        self.offsets = _readonly(offsets)
        self.rotation = None if rotation is None else _readonly(rotation)
        self._s_mean = _readonly(s_mean)
        self._lin_mean = _readonly(lin_mean)
        self._c_mean = c_mean

    def _rotated(self, x) -> np.ndarray:
        x = self._check_x(x)
        return x if self.rotation is None else self.rotation.T @ x

    def component_matrix(self, i) -> np.ndarray:
        """Dense A_i, for cross-checks against the diagonal representation."""
        i = self._check_index(i)
        if self.rotation is None:
            return np.diag(self.spectra[i])
        return self.rotation @ np.diag(self.spectra[i]) @ self.rotation.T

    def component_linear(self, i) -> np.ndarray:
        """b_i in the original coordinates."""
        i = self._check_index(i)
        return self.lin[i].copy() if self.rotation is None else self.rotation @ self.lin[i]

    def component_values(self, x, indices=None):
        y = self._rotated(x)
        s = self.spectra if indices is None else self.spectra[indices]
        b = self.lin if indices is None else self.lin[indices]
        c = self.offsets if indices is None else self.offsets[indices]
        return 0.5 * (s @ (y * y)) + b @ y + c

    def component_grads(self, x, indices=None):
        y = self._rotated(x)
        s = self.spectra if indices is None else self.spectra[indices]
        b = self.lin if indices is None else self.lin[indices]
        w = s * y + b
        return w if self.rotation is None else w @ self.rotation.T

    def eval_full(self, x):
        y = self._rotated(x)
        return self._c_mean + 0.5 * float((self._s_mean * y) @ y) + float(self._lin_mean @ y)

    def grad_full(self, x):
        y = self._rotated(x)
        w = self._s_mean * y + self._lin_mean
        return w if self.rotation is None else self.rotation @ w

    def value_and_grad(self, x):
        y = self._rotated(x)
        sy = self._s_mean * y
        f = self._c_mean + 0.5 * float(sy @ y) + float(self._lin_mean @ y)
        w = sy + self._lin_mean
        return f, (w if self.rotation is None else self.rotation @ w)


class LogisticProblem(FiniteSumProblem):
    """f_i(x) = log(1 + exp(-y_i a_i.x)) + (lam/2) ||x||^2 on given data.

    Uses the softplus form log1p(exp(.)) throughout, so values stay finite
    for arbitrarily large margins. Each component is lam-strongly convex,
    hence all infima exist; they are located numerically (see
    :func:`_minimize`) and the instance is flagged ``numeric_infima``.
    """

    kind = "logistic"

    def __init__(self, features, labels, lam):
        features = np.array(features, dtype=float)
        labels = np.array(labels, dtype=float)
        lam = float(lam)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValueError("features must be (n, d), labels (n,)")
        if lam <= 0:
            raise ValueError("lambda must be positive so component infima are attained")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        n, d = features.shape

        self.features = _readonly(features)
        self.labels = _readonly(labels)
        self.lam = lam
        signed = features * labels[:, None]
        self._signed = _readonly(signed)

        L_each = 0.25 * np.einsum("ij,ij->i", features, features) + lam

        f_inf_each = np.empty(n)
        for i in range(n):
            row = signed[i]

            def fg(x, row=row):
                t = float(row @ x)
                val = float(np.logaddexp(0.0, -t)) + 0.5 * lam * float(x @ x)
                grad = (-expit(-t)) * row + lam * x
                return val, grad

            _, f_inf_each[i] = _minimize(fg, np.zeros(d), step0=1.0 / L_each[i])

        def full_fg(x):
            t = signed @ x
            val = float(np.mean(np.logaddexp(0.0, -t))) + 0.5 * lam * float(x @ x)
            coef = -expit(-t) / n
            return val, coef @ signed + lam * x

        L_bar = float(np.mean(L_each))
        x_star, f_star = _minimize(full_fg, np.zeros(d), step0=1.0 / L_bar)

        super().__init__(
            n=n,
            d=d,
            L_each=L_each,
            f_inf_each=f_inf_each,
            f_star=f_star,
            x_star=x_star,
            numeric_infima=True,
        )

    def _full_value_and_grad(self, x):
        t = self._signed @ x
        val = float(np.mean(np.logaddexp(0.0, -t))) + 0.5 * self.lam * float(x @ x)
        coef = -expit(-t) / self.n
        grad = coef @ self._signed + self.lam * x
        return val, grad

    def component_values(self, x, indices=None):
        x = self._check_x(x)
        s = self._signed if indices is None else self._signed[indices]
        t = s @ x
        return np.logaddexp(0.0, -t) + 0.5 * self.lam * float(x @ x)

    def component_grads(self, x, indices=None):
        x = self._check_x(x)
        s = self._signed if indices is None else self._signed[indices]
        t = s @ x
        return (-expit(-t))[:, None] * s + self.lam * x

    def eval_full(self, x):
        return self._full_value_and_grad(self._check_x(x))[0]

    def grad_full(self, x):
        return self._full_value_and_grad(self._check_x(x))[1]

    def value_and_grad(self, x):
        return self._full_value_and_grad(self._check_x(x))


def _minimize(value_and_grad, x0, step0, grad_tol=GRAD_TOL, max_iter=100_000):
    """Deterministic gradient descent with Armijo backtracking.

    Near the optimum the Armijo decrease falls below float resolution, so a
    step is also accepted when the value change is within rounding noise and
    the step does not exceed the safe initial step; the gradient keeps
    contracting either way. Returns (minimizer, value).
    """
    x = np.array(x0, dtype=float)
    f, g = value_and_grad(x)
    step = step0
    for _ in range(max_iter):
        gg = float(g @ g)
        if math.sqrt(gg) <= grad_tol:
            break
        step = min(2.0 * step, step0)
        moved = False
        for _ in range(60):
            x_new = x - step * g
            f_new, g_new = value_and_grad(x_new)
            armijo = f_new <= f - 1e-4 * step * gg
            noise_floor = f_new <= f + 1e-14 * (1.0 + abs(f)) and step <= step0
            if armijo or noise_floor:
                x, f, g = x_new, f_new, g_new
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return x, f


def make_random_quadratic(n, d, spectrum, heterogeneity, seed, rotate=True) -> QuadraticProblem:
    """Seeded quadratic finite sum with eigenvalues in ``spectrum``.

    ``heterogeneity`` scales the linear terms and the spread of the offsets;
    at zero all linear terms vanish and all offsets coincide, so every
    component shares the minimizer and delta_inf is exactly zero.
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    lo, hi = (float(spectrum[0]), float(spectrum[1]))
    if lo < 0:
        raise ValueError("negative eigenvalues make components unbounded below")
    if lo > hi:
        raise ValueError("spectrum range must satisfy lo <= hi")
    heterogeneity = float(heterogeneity)
    if heterogeneity < 0:
        raise ValueError("heterogeneity must be nonnegative")

    rng = np.random.default_rng(seed)
    spectra = rng.uniform(lo, hi, size=(n, d))
    base_offset = rng.standard_normal()
    lin = heterogeneity * rng.standard_normal((n, d))
    lin[spectra == 0] = 0.0
    offsets = base_offset + heterogeneity * rng.standard_normal(n)
    rotation = None
    if rotate and d > 1:
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        rotation = q * np.sign(np.diag(r))
    return QuadraticProblem(spectra, lin, offsets, rotation=rotation)


def make_logistic(n, d, lam, seed) -> LogisticProblem:
    """Seeded synthetic logistic problem with ridge coefficient ``lam``."""
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    labels = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return LogisticProblem(features, labels, lam)


def finite_diff_check(problem: FiniteSumProblem, x, h: float) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Sweeps every component gradient and the full gradient with step ``h``.
    """
    h = float(h)
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)

    def rel_err(analytic, numeric):
        denom = 1e-12 + float(np.linalg.norm(analytic))
        return float(np.linalg.norm(analytic - numeric)) / denom

    def central(fun):
        g = np.empty_like(x)
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = h
            g[j] = (fun(x + e) - fun(x - e)) / (2.0 * h)
        return g

    worst = rel_err(problem.grad_full(x), central(problem.eval_full))
    for i in range(problem.n):
        numeric = central(lambda p, i=i: problem.eval_component(i, p))
        worst = max(worst, rel_err(problem.grad_component(i, x), numeric))
    return worst
