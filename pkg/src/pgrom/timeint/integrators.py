"""Implicit time stepping on anything that can solve a stage problem.

An *implicit system* exposes ``solve(rule, guess) -> x`` which returns the
state ``x`` satisfying the residual equation for the time-derivative rule
``x' = (x - rule.base) / rule.gamma``.  The full-order model and every
reduced model implement it, so the schemes below are shared.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..core import StageRule, check_finite, stage_jacobian, stage_residual
from ..errors import NonConvergenceError, NumericalFailure, SolverError, StepFailure
from .solvers import NewtonConfig, newton_solve
from .tableau import ButcherTableau, dirk3_tableau, get_tableau

__all__ = [
    "FullOrderSystem",
    "dirk_step",
    "bdf3_step",
    "rk4_step",
    "Trajectory",
    "integrate",
]


class FullOrderSystem:
    """Stage solver for the high-dimensional model (Newton, direct solves)."""

    def __init__(self, model, mu=None, config=NewtonConfig()):
        self.model = model
        self.mu = model.validate_mu(mu)
        self.config = config
        self.newton_iterations = 0

    def solve(self, rule, guess):
        model, mu = self.model, self.mu
        result = newton_solve(
            lambda u: stage_residual(model, u, rule, mu),
            lambda u: stage_jacobian(model, u, rule, mu),
            guess,
            self.config,
        )
        self.newton_iterations += result.iterations
        return result.x

    def reconstruct(self, x):
        return x


def _solve(system, rule, guess):
    try:
        x = system.solve(rule, guess)
        return check_finite(x, "stage state")
    except NonConvergenceError as exc:
        raise StepFailure(str(exc), rule.t, exc.residual_norm) from exc
    except (SolverError, NumericalFailure, FloatingPointError) as exc:
        raise StepFailure(str(exc), rule.t) from exc


def dirk_step(system, x, t, dt, tableau: ButcherTableau):
    """Advance one step of a diagonally implicit Runge-Kutta scheme."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    A, c = tableau.A, tableau.c
    K = []
    guess = x
    for i in range(tableau.stages):
        base = x.copy()
        for j in range(i):
            base += dt * A[i, j] * K[j]
        gamma = dt * A[i, i]
        Xi = _solve(system, StageRule(base, gamma, t + c[i] * dt), guess)
        K.append((Xi - base) / gamma)
        guess = Xi
    out = x.copy()
    for bi, ki in zip(tableau.b, K):
        out += dt * bi * ki
    return out


def bdf3_step(history, system, t, dt):
    """Third-order BDF step from ``history = (x_{n-2}, x_{n-1}, x_n)``."""
    xm2, xm1, x = history
    base = (18.0 * x - 9.0 * xm1 + 2.0 * xm2) / 11.0
    return _solve(system, StageRule(base, 6.0 * dt / 11.0, t + dt), x)


def rk4_step(model, u, t, dt, mu=None):
    """Classical explicit RK4 for ``u' = -f(u)`` (identity mass); test oracle."""

    def rhs(v, s):
        return -model.f_eval(v, mu, s)

    k1 = rhs(u, t)
    k2 = rhs(u + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(u + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(u + dt * k3, t + dt)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class Trajectory:
    """Recorded states of a time integration.

    ``diverged_at`` is the first time at which a step failed or produced a
    non-finite state; ``None`` means the run completed.
    """

    times: np.ndarray
    states: np.ndarray  # (dim, n_records), column per recorded time
    dt: float
    diverged_at: float | None = None
    failure: str | None = None
    wall_time: float = 0.0
    steps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def completed(self):
        return self.diverged_at is None


def integrate(system, x0, t0, dt, n_steps, scheme="dirk2", record_every=1, observer=None):
    """Integrate ``n_steps`` fixed steps and record every ``record_every``-th state.

    Step failures are caught and reported through ``Trajectory.diverged_at``.
    ``observer(t, x)`` is called on every recorded state.  Wall-clock time
    covers the stepping loop only.
    """
    scheme = scheme.lower()
    tableau = dirk3_tableau() if scheme == "bdf3" else get_tableau(scheme)
    x = np.array(x0, dtype=float, copy=True)
    times, states = [t0], [x.copy()]
    if observer is not None:
        observer(t0, x)
    hist = [x.copy()]
    diverged, failure = None, None
    start = time.perf_counter()
    k = 0
    for k in range(1, n_steps + 1):
        t = t0 + (k - 1) * dt
        try:
            if scheme == "bdf3" and len(hist) >= 3:
                x = bdf3_step(hist[-3:], system, t, dt)
            else:
                x = dirk_step(system, x, t, dt, tableau)
        except StepFailure as exc:
            diverged, failure = t + dt, str(exc)
            break
        if scheme == "bdf3":
            hist = (hist + [x])[-3:]
        if k % record_every == 0:
            tk = t0 + k * dt
            times.append(tk)
            states.append(x.copy())
            if observer is not None:
                observer(tk, x)
    wall = time.perf_counter() - start
    return Trajectory(
        np.array(times), np.column_stack(states), dt, diverged, failure, wall, k if diverged is None else k - 1
    )
