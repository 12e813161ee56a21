"""Dense checks on linearized reduced problems.

These work on explicit matrices and back the step-direction and nested
subspace properties of Petrov-Galerkin projection.
"""

import numpy as np
import scipy.linalg as la

from ..errors import LinearSolveError
from ..timeint.solvers import theta_sqrt_apply

__all__ = ["pg_step", "step_direction_error_check", "minimized_residual_norm"]


def _theta(theta, N):
    return np.eye(N) if theta is None else np.asarray(theta, dtype=float)


def _solve(A, b, what, **kwargs):
    # scipy may return inf/nan for singular diagonal matrices instead of raising
    try:
        with np.errstate(all="ignore"):
            x = la.solve(A, b, **kwargs)
    except la.LinAlgError as exc:
        raise LinearSolveError(f"singular {what}") from exc
    if not np.all(np.isfinite(x)):
        raise LinearSolveError(f"singular {what}")
    return x


def pg_step(J, r, V, W):
    """Solve ``W^T J V x = -W^T r``."""
    return _solve(W.T @ J @ V, -(W.T @ r), "reduced system")


def step_direction_error_check(J, r, V, theta=None):
    """Compare the Petrov-Galerkin step with the step-error minimizer.

    Solves ``du = -J^{-1} r``; computes ``x_pg`` from ``W^T J V x = -W^T r``
    with ``W = Theta J V``, and independently ``x_min`` minimizing
    ``|V x - du|^2`` in the ``J^T Theta J`` norm by dense normal equations.
    Returns ``max |x_pg - x_min|``.
    """
    J = np.asarray(J, dtype=float)
    V = np.asarray(V, dtype=float)
    Theta = _theta(theta, J.shape[0])
    du = _solve(J, -np.asarray(r, dtype=float), "Jacobian")
    x_pg = pg_step(J, r, V, Theta @ J @ V)
    G = J.T @ Theta @ J
    x_min = _solve(V.T @ G @ V, V.T @ G @ du, "normal equations", assume_a="pos")
    return float(np.max(np.abs(x_pg - x_min)))


def minimized_residual_norm(J, r, V, theta=None):
    """``min_x |J V x + r|_Theta`` by least squares."""
    JV = np.asarray(J) @ np.asarray(V)
    A = theta_sqrt_apply(theta, JV)
    b = theta_sqrt_apply(theta, np.asarray(r, dtype=float))
    x, *_ = la.lstsq(A, -b)
    return float(np.linalg.norm(A @ x + b))
