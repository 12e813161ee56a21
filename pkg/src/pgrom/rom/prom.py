"""Galerkin and Petrov-Galerkin projection-based reduced-order models.

Reduced stage problems are posed in reduced coordinates: a rule
``StageRule(base_y, gamma, t)`` means ``y' = (y - base_y) / gamma`` and the
full-space time derivative is ``V y'``.  An *evaluator* returns the residual
rows, ``J V`` rows and row weights at ``u0 + V y``; the full evaluator uses
every row, the hyperreduced one only sampled cells.  :class:`ReducedSystem`
combines an evaluator with a :class:`LeftBasisStrategy` and exposes the
``solve(rule, guess)`` interface used by the time integrators.
"""

from __future__ import annotations

import numpy as np

from ..core import StageRule, stage_jacobian, stage_residual
from ..errors import ContractError
from ..timeint.integrators import bdf3_step, dirk_step
from ..timeint.solvers import NewtonConfig, newton_solve
from ..timeint.tableau import get_tableau
from .strategies import LeftBasisStrategy

__all__ = [
    "FullEvaluator",
    "ReducedSystem",
    "full_rule",
    "galerkin_reduced_residual",
    "pg_reduced_system",
    "solve_prom_step",
]


def full_rule(basis, rule):
    """Lift a reduced-coordinate rule to the full state space."""
    if rule is None or rule.is_steady:
        return StageRule.steady(0.0 if rule is None else rule.t)
    return StageRule(basis.reconstruct(rule.base), rule.gamma, rule.t)


class FullEvaluator:
    """Residual and ``J V`` on all rows of the high-dimensional model."""

    hyperreduced = False

    def __init__(self, model, basis, mu=None):
        if basis.N != model.dim:
            raise ContractError(f"basis has {basis.N} rows, model has dimension {model.dim}")
        self.model = model
        self.basis = basis
        self.mu = model.validate_mu(mu)
        self.V_rows = basis.V
        self.MV = model.mass_apply(basis.V)
        self.weights = None

    def evaluate(self, y, rule, need_jacobian=False):
        """``(r, J V, u, J)``; the stage Jacobian ``J`` is only formed on request."""
        u = self.basis.reconstruct(y)
        frule = full_rule(self.basis, rule)
        r = stage_residual(self.model, u, frule, self.mu)
        JV = self.model.jac_times(u, self.basis.V, self.mu, frule.t)
        if not frule.is_steady:
            JV = JV + self.MV / frule.gamma
        J = stage_jacobian(self.model, u, frule, self.mu) if need_jacobian else None
        return r, JV, u, J


class ReducedSystem:
    """Implicit reduced system ``W^T r(u0 + V y) = 0`` solved by Newton.

    With the ``per_timestep`` policy the test basis is built at the initial
    guess of each nonlinear solve and reused for all its iterations; with
    ``per_iteration`` it is rebuilt at every iterate, which for ``lspg`` is
    exactly the Gauss-Newton method.
    """

    def __init__(self, evaluator, strategy=None, config=NewtonConfig(xtol=1e-12)):
        self.evaluator = evaluator
        self.strategy = strategy or LeftBasisStrategy.lspg()
        self.config = config
        self.newton_iterations = 0
        self.solves = 0
        self._needs_jacobian = self.strategy.variant == "theta_weighted" and callable(self.strategy.theta)

    @property
    def basis(self):
        return self.evaluator.basis

    def reconstruct(self, y):
        return self.basis.reconstruct(y)

    def reduced_quantities(self, y, rule, W=None):
        """``(W^T Xi r, W^T Xi J V, W)`` at ``y``; ``Xi`` are ECSW row weights."""
        r, JV, u, J = self.evaluator.evaluate(y, rule, self._needs_jacobian and W is None)
        if W is None:
            W = self.strategy.left_basis(self.evaluator.V_rows, JV, r, u, J)
        Wx = W if self.evaluator.weights is None else W * self.evaluator.weights[:, None]
        return Wx.T @ r, Wx.T @ JV, W

    def solve(self, rule, guess):
        frozen = {}
        cache = {}

        def residual(y):
            W = frozen.get("W")
            res, jac, W = self.reduced_quantities(y, rule, W)
            if self.strategy.frozen_per_solve:
                frozen.setdefault("W", W)
            cache["y"], cache["jac"] = y.copy(), jac
            return res

        def jacobian(y):
            if "y" in cache and np.array_equal(cache["y"], y):
                return cache["jac"]
            return self.reduced_quantities(y, rule, frozen.get("W"))[1]

        result = newton_solve(residual, jacobian, guess, self.config)
        self.newton_iterations += result.iterations
        self.solves += 1
        return result.x


def galerkin_reduced_residual(model, basis, y, udot_rule=None, mu=None):
    """``V^T r(u0 + V y)``; ``udot_rule`` is a full-space :class:`StageRule`."""
    y = np.asarray(y, dtype=float)
    if y.shape != (basis.n,):
        raise ContractError(f"reduced state has shape {y.shape}, expected ({basis.n},)")
    if basis.N != model.dim:
        raise ContractError("basis and model dimensions disagree")
    rule = udot_rule or StageRule.steady()
    return basis.V.T @ stage_residual(model, basis.reconstruct(y), rule, model.validate_mu(mu))


def pg_reduced_system(model, basis, strategy, y, mu=None, rule=None):
    """Reduced residual ``W^T r`` and reduced Jacobian ``W^T J V`` at ``y``.

    ``rule`` is in reduced coordinates (steady when omitted).
    """
    system = ReducedSystem(FullEvaluator(model, basis, mu), strategy)
    res, jac, _ = system.reduced_quantities(np.asarray(y, dtype=float), rule)
    return res, jac


def solve_prom_step(model, basis, strategy, integrator, y_n, dt, solver=NewtonConfig(xtol=1e-12), mu=None, t=0.0):
    """Advance reduced coordinates by one step.

    ``integrator`` is ``"dirk2"``/``"dirk3"``, a :class:`ButcherTableau`, or
    ``"bdf3"`` in which case ``y_n`` is the history ``(y_{n-2}, y_{n-1}, y_n)``.
    """
    system = ReducedSystem(FullEvaluator(model, basis, mu), strategy, solver)
    if isinstance(integrator, str) and integrator.lower() == "bdf3":
        return bdf3_step([np.asarray(h, dtype=float) for h in y_n], system, t, dt)
    tableau = get_tableau(integrator) if isinstance(integrator, str) else integrator
    return dirk_step(system, np.asarray(y_n, dtype=float), t, dt, tableau)
