"""Dense nonnegative least squares by the classic active-set method.

Solves min_x ||A x - b||^2 subject to x >= 0 for small dense designs (the
coefficient fits here have three columns). Lawson-Hanson style: grow the
passive set by the most positive dual, solve the unconstrained subproblem
on the passive columns, and step back toward feasibility whenever the
subproblem solution leaves the nonnegative orthant.
"""

from __future__ import annotations

import numpy as np

__all__ = ["nnls"]


def nnls(A, b, max_iter=None, tol=None):
    """Returns (x, residual_norm) with x >= 0 minimizing ||A x - b||.

    ``tol`` is the dual-feasibility tolerance on the gradient A^T (b - A x);
    it defaults to a multiple of machine epsilon scaled by the problem size.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError("A must be (m, n) and b (m,)")
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n
    if tol is None:
        tol = 10.0 * np.finfo(float).eps * max(m, n) * max(1.0, float(np.abs(A).max()))

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ b

    for _ in range(max_iter):
        active = ~passive
        if not active.any() or np.max(w[active]) <= tol:
            break
        candidates = np.where(active, w, -np.inf)
        passive[int(np.argmax(candidates))] = True

        while True:
            s = np.zeros(n)
            cols = np.flatnonzero(passive)
            s[cols], *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
            if np.all(s[cols] > 0):
                x = s
                break
            # Step from x toward s just far enough to hit the boundary,
            # then drop the columns that land at zero.
            blocking = cols[s[cols] <= 0]
            alpha = np.min(x[blocking] / (x[blocking] - s[blocking]))
            x = x + alpha * (s - x)
            passive[(x <= tol) & passive] = False
            x[~passive] = 0.0
        w = A.T @ (b - A @ x)

    residual = b - A @ x
    return x, float(np.linalg.norm(residual))
