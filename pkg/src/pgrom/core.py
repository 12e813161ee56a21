"""Semi-discrete model contract and residual evaluation.

A model describes the first-order system ``M u' + f(u; mu, t) = 0``.  Time
integrators turn each implicit solve into the residual form

    r(u) = M u' + f(u)      with   u' = (u - base) / gamma,

where ``base`` and ``gamma`` come from the time-discretization rule
(a DIRK stage or a BDF step).  :class:`StageRule` carries that pair.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContractError, NumericalFailure

__all__ = [
    "ParamPoint",
    "State",
    "StageRule",
    "SemiDiscreteModel",
    "residual",
    "stage_residual",
    "stage_jacobian",
    "apply_operator",
    "jacobian_fd_check",
    "check_finite",
]


@dataclass(frozen=True)
class ParamPoint:
    """Parameter vector ``mu``; every built-in model accepts the empty point."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1:
            raise ContractError("parameter point must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ContractError("parameter point has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.size


@dataclass
class State:
    u: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class StageRule:
    """Affine time-derivative relation ``u' = (u - base) / gamma``.

    ``gamma = inf`` encodes a steady problem (``u' = 0``).
    """

    base: np.ndarray | None
    gamma: float
    t: float = 0.0

    @classmethod
    def steady(cls, t=0.0):
        return cls(None, np.inf, t)

    @property
    def is_steady(self):
        return not np.isfinite(self.gamma)

    def udot(self, u):
        if self.is_steady:
            return np.zeros_like(u)
        return (u - self.base) / self.gamma


def check_finite(x, what="output"):
    x = np.asarray(x)
    bad = ~np.isfinite(x)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise NumericalFailure(f"non-finite {what} at index {idx}", index=idx)
    return x


class SemiDiscreteModel(abc.ABC):
    """Contract every high-dimensional model implements.

    Subclasses provide :meth:`f_eval` and :meth:`jacobian`.  The defaults
    give an identity mass matrix, a single state block and the row-wise
    residual decomposition (cell ``e`` owns row ``e``).
    """

    #: number of parameters the model expects
    n_params = 0

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        ...

    @property
    def cell_count(self) -> int:
        return self.dim

    @property
    def state_blocks(self):
        """Slices of the state vector holding one physical variable each."""
        return [slice(0, self.dim)]

    # -- mass ------------------------------------------------------------
    @property
    def has_identity_mass(self):
        return True

    def mass_matrix(self):
        return sp.identity(self.dim, format="csr")

    def mass_apply(self, x):
        return np.array(x, dtype=float, copy=True)

    # -- nonlinear term --------------------------------------------------
    @abc.abstractmethod
    def f_eval(self, u, mu=None, t=0.0) -> np.ndarray:
        ...

    @abc.abstractmethod
    def jacobian(self, u, mu=None, t=0.0):
        """Jacobian of ``f`` as a sparse matrix, ndarray or LinearOperator."""

    def jac_times(self, u, X, mu=None, t=0.0):
        """``J(u) @ X``; models may override with a matrix-free product."""
        return apply_operator(self.jacobian(u, mu, t), X)

    # -- additive decomposition -------------------------------------------
    def cell_row_map(self):
        """Integer array (cell_count, k): the residual rows owned by each cell.

        Cells own disjoint rows, so summing the per-cell pieces gives back
        the full residual.
        """
        return np.arange(self.dim).reshape(-1, 1)

    def per_cell_residual(self, u, udot, mu, cell, t=0.0):
        """Contribution of one cell to the residual as ``(rows, values)``."""
        rows = self.cell_row_map()[cell]
        r = self.mass_apply(udot)[rows] + self.f_eval(u, mu, t)[rows]
        return rows, r

    def restrict(self, cells):
        """Evaluator touching only ``cells`` and their stencil, or None."""
        return None

    def validate_mu(self, mu):
        if mu is None:
            mu = ParamPoint()
        if not isinstance(mu, ParamPoint):
            mu = ParamPoint(mu)
        if mu.dim != self.n_params:
            raise ContractError(f"expected {self.n_params} parameters, got {mu.dim}")
        return mu

    def _check_state(self, u, name="u"):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ContractError(f"{name} has shape {u.shape}, expected ({self.dim},)")
        return u


def residual(model, u, udot, mu=None, t=0.0):
    """``M(mu) udot + f(u; mu)`` with shape and finiteness checks."""
    if isinstance(u, State):
        u, t = u.u, u.t
    u = model._check_state(u)
    udot = model._check_state(udot, "udot")
    mu = model.validate_mu(mu)
    r = model.mass_apply(udot) + model.f_eval(u, mu, t)
    return check_finite(r, "residual")


def stage_residual(model, u, rule: StageRule, mu=None):
    r = model.f_eval(u, mu, rule.t)
    if not rule.is_steady:
        r = r + model.mass_apply(u - rule.base) / rule.gamma
    return r


def stage_jacobian(model, u, rule: StageRule, mu=None):
    """Jacobian of :func:`stage_residual`, ``M / gamma + df/du``."""
    J = model.jacobian(u, mu, rule.t)
    if rule.is_steady:
        return J
    if isinstance(J, spla.LinearOperator):
        if hasattr(J, "shifted"):
            return J.shifted(1.0 / rule.gamma)
        return J + spla.aslinearoperator(model.mass_matrix() / rule.gamma)
    if sp.issparse(J):
        return (J + model.mass_matrix() / rule.gamma).tocsc()
    return J + model.mass_matrix().toarray() / rule.gamma


def apply_operator(J, X):
    """``J @ X`` for sparse, dense or LinearOperator ``J`` and 1-D/2-D ``X``."""
    if isinstance(J, spla.LinearOperator):
        return J.matmat(X) if np.ndim(X) == 2 else J.matvec(X)
    return J @ X


def jacobian_fd_check(model, u, mu=None, h=1e-6, n_directions=20, seed=0, t=0.0):
    """Largest relative mismatch between ``J d`` and central differences of ``f``.

    ``h`` is scaled by ``1 + max|u|``.  Returns
    ``max_d max_i |J d - (f(u+hd) - f(u-hd)) / 2h|_i / (1 + |J d|_inf)``
    over ``n_directions`` random unit directions.
    """
    if h <= 0:
        raise ContractError("finite-difference step must be positive")
    u = model._check_state(u)
    mu = model.validate_mu(mu)
    rng = np.random.default_rng(seed)
    step = h * (1.0 + np.max(np.abs(u)))
    J = model.jacobian(u, mu, t)
    worst = 0.0
    for _ in range(max(n_directions, 1)):
        d = rng.standard_normal(model.dim)
        d /= np.linalg.norm(d)
        Jd = apply_operator(J, d)
        fd = (model.f_eval(u + step * d, mu, t) - model.f_eval(u - step * d, mu, t)) / (2 * step)
        err = np.max(np.abs(Jd - fd)) / (1.0 + np.max(np.abs(Jd)))
        worst = max(worst, float(err))
    return worst
