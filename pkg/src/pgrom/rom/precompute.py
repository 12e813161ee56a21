"""Exact offline/online split for models with a quadratic nonlinearity.

For ``f(u) = c + A u + H(u, u)`` and ``u = u0 + V y``::

    f(u0 + V y) = f(u0) + sum_j a_j y_j + sum_jk h_jk y_j y_k
    a_j  = A V_j + 2 H(u0, V_j)
    h_jk = H(V_j, V_k)

Galerkin projection only needs ``V^T f(u0)``, ``V^T a`` and ``V^T h``
(cubic online cost).  Least-squares Petrov-Galerkin needs inner products
between residuals and Jacobian columns.  Both are linear combinations of
the fixed vectors ``B = [f(u0), M V, a]`` and ``h``, so all Gram products
``B^T B``, ``B^T h`` and ``h^T h`` are formed once and the online
contraction is quartic in ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import StageRule
from ..errors import InapplicableError
from ..timeint.solvers import NewtonConfig, newton_solve
from .strategies import LeftBasisStrategy

__all__ = ["QuadraticRomOperators", "precompute_quadratic", "PrecomputedSystem", "third_difference_check"]


def third_difference_check(model, n_trials=3, seed=0, tol=1e-8):
    """True when every third difference of ``f`` along random lines vanishes."""
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        u = rng.standard_normal(model.dim)
        d = rng.standard_normal(model.dim)
        vals = [model.f_eval(u + k * d) for k in range(4)]
        third = vals[3] - 3 * vals[2] + 3 * vals[1] - vals[0]
        scale = max(np.max(np.abs(v)) for v in vals)
        if np.max(np.abs(third)) > tol * max(scale, 1.0):
            return False
    return True


@dataclass
class QuadraticRomOperators:
    """Reduced tensors for online evaluation with no ``N``-sized work.

    ``GBB``, ``GBH`` and ``GHH`` are the Gram contractions used by the
    least-squares variant (``None`` when only Galerkin was requested).
    Index layout of ``B``: ``[f(u0), M V_1..M V_n, a_1..a_n]``.
    """

    c: np.ndarray  # (n,)
    A: np.ndarray  # (n, n)
    H: np.ndarray  # (n, n, n), symmetric in the last two indices
    M: np.ndarray  # (n, n) reduced mass V^T M V
    GBB: np.ndarray | None = None  # (1+2n, 1+2n)
    GBH: np.ndarray | None = None  # (1+2n, n, n)
    GHH: np.ndarray | None = None  # (n, n, n, n)
    provenance: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.c.size

    @property
    def has_lspg(self):
        return self.GHH is not None

    def online_arrays(self):
        return [a for a in (self.c, self.A, self.H, self.M, self.GBB, self.GBH, self.GHH) if a is not None]

    def max_online_extent(self):
        """Largest axis length among online arrays (at most ``1 + 2n``)."""
        return max(max(a.shape) for a in self.online_arrays())

    # -- Galerkin ----------------------------------------------------------
    def f_reduced(self, y):
        """``V^T f(u0 + V y)``."""
        return self.c + self.A @ y + np.einsum("ijk,j,k->i", self.H, y, y)

    def jacobian_reduced(self, y):
        """``V^T J(u0 + V y) V``."""
        return self.A + 2.0 * np.einsum("ijk,k->ij", self.H, y)

    def galerkin_system(self, y, rule):
        inv_g = _inv_gamma(rule)
        res = self.f_reduced(y)
        jac = self.jacobian_reduced(y)
        if inv_g:
            res = res + inv_g * (self.M @ (y - rule.base))
            jac = jac + inv_g * self.M
        return res, jac

    # -- least squares -----------------------------------------------------
    def _beta(self, y, rule):
        n = self.n
        beta = np.zeros(1 + 2 * n)
        beta[0] = 1.0
        inv_g = _inv_gamma(rule)
        if inv_g:
            beta[1 : n + 1] = inv_g * (y - rule.base)
        beta[n + 1 :] = y
        return beta

    def _bcoef(self, rule):
        n = self.n
        Bc = np.zeros((1 + 2 * n, n))
        Bc[1 : n + 1] = _inv_gamma(rule) * np.eye(n)
        Bc[n + 1 :] = np.eye(n)
        return Bc

    def lspg_system(self, y, rule, yW=None):
        """``(W^T r, W^T J V)`` with ``W = J V`` evaluated at ``yW``.

        The residual is ``r = B beta + sum_jk h_jk y_j y_k`` and Jacobian
        column ``m`` is ``B Bc[:, m] + 2 sum_k h_mk y_k``.
        """
        if not self.has_lspg:
            raise InapplicableError("operators were built without the least-squares tensors")
        yW = y if yW is None else yW
        GBB, GBH, T = self.GBB, self.GBH, self.GHH
        beta = self._beta(y, rule)
        Bc = self._bcoef(rule)

        # Jacobian columns at yW against the residual at y
        GBH_yy = np.einsum("ajk,j,k->a", GBH, y, y)
        res = Bc.T @ (GBB @ beta + GBH_yy)
        res += 2.0 * np.einsum("amk,a,k->m", GBH, beta, yW)
        res += 2.0 * np.einsum("mkpl,k,p,l->m", T, yW, y, y, optimize=True)

        # Jacobian columns at yW against Jacobian columns at y
        jac = Bc.T @ GBB @ Bc
        jac += 2.0 * Bc.T @ np.einsum("aql,l->aq", GBH, y)
        jac += 2.0 * np.einsum("amk,k->ma", GBH, yW) @ Bc
        jac += 4.0 * np.einsum("mkql,k,l->mq", T, yW, y, optimize=True)
        return res, jac


def _inv_gamma(rule):
    if rule is None or rule.is_steady:
        return 0.0
    return 1.0 / rule.gamma


def precompute_quadratic(model, basis, lspg=True, check=True):
    """Build :class:`QuadraticRomOperators` for ``model`` on ``basis``.

    Raises
    ------
    InapplicableError
        If the model does not expose its quadratic parts or is not exactly
        quadratic.
    """
    parts_fn = getattr(model, "quadratic_parts", None)
    if parts_fn is None:
        raise InapplicableError(f"{type(model).__name__} does not expose quadratic parts")
    if check and not third_difference_check(model):
        raise InapplicableError("model is not exactly quadratic (third differences do not vanish)")
    parts = parts_fn()
    V, u0 = basis.V, basis.u0
    n = basis.n

    f0 = model.f_eval(u0)
    a = parts.linear(V) + 2.0 * parts.bilinear(np.repeat(u0[:, None], n, axis=1), V)
    jj, kk = np.triu_indices(n)
    h_upper = parts.bilinear(V[:, jj], V[:, kk])
    h = np.empty((V.shape[0], n, n))
    h[:, jj, kk] = h_upper
    h[:, kk, jj] = h_upper
    MV = model.mass_apply(V) if not model.has_identity_mass else V

    ops = QuadraticRomOperators(
        c=V.T @ f0,
        A=V.T @ a,
        H=np.einsum("ni,njk->ijk", V, h),
        M=V.T @ MV,
        provenance={"basis": basis.provenance_hash(), "model": type(model).__name__, "n": n},
    )
    if lspg:
        B = np.column_stack([f0, MV, a])
        hm = h.reshape(V.shape[0], n * n)
        ops.GBB = B.T @ B
        ops.GBH = (B.T @ hm).reshape(1 + 2 * n, n, n)
        ops.GHH = (hm.T @ hm).reshape(n, n, n, n)
    return ops


class PrecomputedSystem:
    """Implicit reduced system evaluated purely from precomputed tensors.

    Supports ``galerkin`` and ``lspg`` (with ``Psi = I``) strategies; the
    ``per_timestep`` policy freezes ``W`` at the initial guess of each solve.
    """

    def __init__(self, ops, basis, strategy=None, config=NewtonConfig(xtol=1e-12)):
        strategy = strategy or LeftBasisStrategy.lspg()
        if strategy.variant not in ("galerkin", "lspg") or strategy.psi is not None:
            raise InapplicableError("pre-computation supports galerkin and unweighted lspg only")
        if strategy.variant == "lspg" and not ops.has_lspg:
            raise InapplicableError("least-squares tensors were not built")
        self.ops = ops
        self.basis = basis
        self.strategy = strategy
        self.config = config
        self.newton_iterations = 0
        self.evaluations = 0

    def reconstruct(self, y):
        return self.basis.reconstruct(y)

    def reduced_quantities(self, y, rule, yW=None):
        self.evaluations += 1
        if self.strategy.is_galerkin:
            return self.ops.galerkin_system(y, rule)
        return self.ops.lspg_system(y, rule, yW)

    def solve(self, rule, guess):
        rule = rule or StageRule.steady()
        yW = np.array(guess, dtype=float) if self.strategy.frozen_per_solve else None
        cache = {}

        def residual(y):
            res, jac = self.reduced_quantities(y, rule, yW)
            cache["y"], cache["jac"] = y.copy(), jac
            return res

        def jacobian(y):
            if "y" in cache and np.array_equal(cache["y"], y):
                return cache["jac"]
            return self.reduced_quantities(y, rule, yW)[1]

        result = newton_solve(residual, jacobian, guess, self.config)
        self.newton_iterations += result.iterations
        return result.x
