"""Implicit time integration and nonlinear solvers."""

from .integrators import FullOrderSystem, Trajectory, bdf3_step, dirk_step, integrate, rk4_step
from .solvers import NewtonConfig, SolveResult, gauss_newton_solve, linear_solve, newton_solve
from .tableau import ButcherTableau, dirk2_tableau, dirk3_tableau, get_tableau

__all__ = [
    "ButcherTableau",
    "dirk2_tableau",
    "dirk3_tableau",
    "get_tableau",
    "NewtonConfig",
    "SolveResult",
    "newton_solve",
    "gauss_newton_solve",
    "linear_solve",
    "FullOrderSystem",
    "Trajectory",
    "dirk_step",
    "bdf3_step",
    "rk4_step",
    "integrate",
]
