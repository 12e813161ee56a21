"""Newton and Gauss-Newton solvers shared by full and reduced models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ConfigurationError, LinearSolveError, NonConvergenceError

__all__ = [
    "NewtonConfig",
    "SolveResult",
    "linear_solve",
    "newton_solve",
    "gauss_newton_solve",
    "theta_sqrt_apply",
]


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping rule ``|r| <= atol + rtol |r0|`` and iteration cap.

    ``linear_solver`` is ``"direct"`` (dense or sparse factorization) or
    ``"approximate"`` (the Jacobian object's own ``solve``, giving an inexact
    Newton iteration).  ``xtol`` optionally also stops either Newton variant when
    the step is tiny relative to the iterate.
    """

    atol: float = 1e-10
    rtol: float = 1e-8
    max_iter: int = 20
    linear_solver: str = "direct"
    xtol: float | None = None

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ConfigurationError("tolerances must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.linear_solver not in ("direct", "approximate"):
            raise ConfigurationError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    history: list = field(default_factory=list)


def linear_solve(J, rhs, strategy="direct"):
    """Solve ``J x = rhs`` for dense, sparse or operator ``J``."""
    if strategy == "approximate" and hasattr(J, "solve"):
        return J.solve(rhs)
    try:
        if isinstance(J, np.ndarray):
            with np.errstate(all="ignore"):
                x = la.solve(J, rhs, check_finite=False)
        elif sp.issparse(J):
            with np.errstate(all="ignore"):
                x = spla.splu(sp.csc_matrix(J)).solve(rhs)
        elif hasattr(J, "solve"):
            x = J.solve(rhs)
        else:
            raise LinearSolveError("operator Jacobian needs an approximate solver")
    except (la.LinAlgError, RuntimeError, ValueError) as exc:
        raise LinearSolveError(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("linear solve produced non-finite values")
    return x


def newton_solve(residual_fn, jacobian_fn, y0, config=NewtonConfig(), record=False):
    """Newton-Raphson iteration on a square system.

    Raises
    ------
    NonConvergenceError
        If the stopping rule is not met within ``config.max_iter`` iterations
        or the residual becomes non-finite.
    LinearSolveError
        If a Jacobian solve fails.
    """
    y = np.array(y0, dtype=float, copy=True)
    r = residual_fn(y)
    r0 = rnorm = float(np.linalg.norm(r))
    tol = config.atol + config.rtol * r0
    history = [y.copy()] if record else []
    if not np.isfinite(rnorm):
        raise NonConvergenceError("initial residual is not finite", rnorm, 0)
    if rnorm <= config.atol:
        return SolveResult(y, 0, rnorm, True, history)
    for it in range(1, config.max_iter + 1):
        dy = linear_solve(jacobian_fn(y), -r, config.linear_solver)
        y = y + dy
        r = residual_fn(y)
        rnorm = float(np.linalg.norm(r))
        if record:
            history.append(y.copy())
        if not np.isfinite(rnorm):
            raise NonConvergenceError("residual became non-finite", rnorm, it)
        if rnorm <= tol:
            return SolveResult(y, it, rnorm, True, history)
        if config.xtol is not None and np.linalg.norm(dy) <= config.xtol * (1.0 + np.linalg.norm(y)):
            # update at roundoff level: further iterations cannot reduce |r|
            return SolveResult(y, it, rnorm, True, history)
    raise NonConvergenceError(
        f"Newton did not converge in {config.max_iter} iterations (|r| = {rnorm:.3e})",
        rnorm,
        config.max_iter,
    )


def theta_sqrt_apply(weight, X):
    """Apply ``C^T`` to ``X`` where ``Theta = C C^T``.

    ``weight`` is None (identity), a 1-D diagonal or a dense SPD matrix.
    """
    if weight is None:
        return X
    weight = np.asarray(weight)
    if weight.ndim == 1:
        s = np.sqrt(weight)
        return s[:, None] * X if X.ndim == 2 else s * X
    try:
        C = la.cholesky(weight, lower=True)
    except la.LinAlgError as exc:
        raise LinearSolveError("weighting matrix is not SPD") from exc
    return C.T @ X


def _theta_apply(weight, x):
    if weight is None:
        return x
    weight = np.asarray(weight)
    return weight * x if weight.ndim == 1 else weight @ x


def gauss_newton_solve(residual_fn, jacobian_fn, V, theta_strategy, y0, config=NewtonConfig(), record=False):
    """Minimize ``|r(y)|_Theta^2`` by Gauss-Newton.

    ``residual_fn(y)`` returns the full residual ``r(u0 + V y)`` and
    ``jacobian_fn(y)`` its full Jacobian; ``theta_strategy.weight(r)`` gives
    the SPD weighting (None, diagonal or dense).  Each step solves the
    linear least-squares problem ``min |C^T (J V dy + r)|`` by QR, where
    ``Theta = C C^T``.  Converged when the first-order condition
    ``|V^T J^T Theta r| <= atol + rtol |g0|`` holds (or the step test
    ``|dy| <= xtol (1 + |y|)`` when ``config.xtol`` is set).
    """
    from ..core import apply_operator

    V = np.asarray(V)
    y = np.array(y0, dtype=float, copy=True)
    history = [y.copy()] if record else []
    g0 = None
    gnorm = np.inf
    for it in range(config.max_iter + 1):
        r = residual_fn(y)
        if not np.all(np.isfinite(r)):
            raise NonConvergenceError("residual became non-finite", np.inf, it)
        JV = apply_operator(jacobian_fn(y), V)
        weight = theta_strategy.weight(r)
        g = JV.T @ _theta_apply(weight, r)
        gnorm = float(np.linalg.norm(g))
        if g0 is None:
            g0 = gnorm
        if gnorm <= config.atol + config.rtol * g0 and (it > 0 or gnorm <= config.atol):
            return SolveResult(y, it, gnorm, True, history)
        if it == config.max_iter:
            break
        A = theta_sqrt_apply(weight, JV)
        rhs = -theta_sqrt_apply(weight, r)
        dy, _, rank, _ = la.lstsq(A, rhs, lapack_driver="gelsd")
        if rank < V.shape[1]:
            raise LinearSolveError("reduced Jacobian J V is rank deficient")
        y = y + dy
        if record:
            history.append(y.copy())
        if config.xtol is not None and np.linalg.norm(dy) <= config.xtol * (1.0 + np.linalg.norm(y)):
            return SolveResult(y, it + 1, gnorm, True, history)
    raise NonConvergenceError(
        f"Gauss-Newton did not converge in {config.max_iter} iterations (|g| = {gnorm:.3e})",
        gnorm,
        config.max_iter,
    )
