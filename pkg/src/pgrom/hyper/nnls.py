"""Active-set nonnegative least squares with an early-exit tolerance."""

import numpy as np
import scipy.linalg as la

from ..errors import NonConvergenceError

__all__ = ["lawson_hanson"]


def lawson_hanson(G, b, epsilon=0.0, max_iter=None, dual_tol=None):
    """Minimize ``|G x - b|`` subject to ``x >= 0``.

    Columns enter the passive set one at a time (largest dual value,
    lowest index on ties) and the iteration stops as soon as
    ``|G x - b| <= epsilon |b|`` or no dual value is positive.

    Returns ``(x, residual_norm, outer_iterations)``.

    Raises
    ------
    NonConvergenceError
        After ``max_iter`` outer iterations (default ``3 * n_columns``),
        carrying the residual reached so far.
    """
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = G.shape
    max_iter = 3 * n if max_iter is None else max_iter
    bnorm = float(np.linalg.norm(b))
    target = epsilon * bnorm
    if dual_tol is None:
        dual_tol = 10 * max(m, n) * np.finfo(float).eps * np.linalg.norm(G, 1) * max(bnorm, 1e-300)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)  # columns that just failed to enter
    r = b.copy()
    rnorm = bnorm
    it = 0
    while rnorm > target:
        if it >= max_iter:
            raise NonConvergenceError(f"NNLS stopped after {it} iterations with residual {rnorm:.3e}", rnorm, it)
        it += 1
        w = G.T @ r
        w[passive | blocked] = -np.inf
        j = int(np.argmax(w))  # first maximal index
        if not w[j] > dual_tol:
            break
        passive[j] = True
        while True:
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            z[idx] = la.lstsq(G[:, idx], b, lapack_driver="gelsy")[0]
            if np.all(z[idx] > 0):
                x = z
                break
            neg = idx[z[idx] <= 0]
            gap = x[neg] - z[neg]
            alpha = np.min(np.where(gap > 0, x[neg] / np.where(gap > 0, gap, 1.0), 0.0))
            x = x + alpha * (z - x)
            passive &= x > 1e-14 * max(1.0, np.max(np.abs(x)))
            x[~passive] = 0.0
            if not passive.any():
                break
        blocked[:] = False
        if not passive[j]:
            # roundoff rejected the new column; try the next candidate first
            blocked[j] = True
        r = b - G @ x
        rnorm = float(np.linalg.norm(r))
    return x, rnorm, it
