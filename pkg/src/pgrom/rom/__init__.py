"""Reduced bases, projection-based reduced-order models and pre-computation."""

from .linear_checks import minimized_residual_norm, pg_step, step_direction_error_check
from .pod import ReducedBasis, build_pod, cumulative_energy, energy_dimension
from .precompute import PrecomputedSystem, QuadraticRomOperators, precompute_quadratic, third_difference_check
from .prom import FullEvaluator, ReducedSystem, full_rule, galerkin_reduced_residual, pg_reduced_system, solve_prom_step
from .snapshots import SnapshotSet, collect_snapshots, snapshot_count
from .strategies import IdentityTheta, L1Theta, LeftBasisStrategy, MatrixTheta, l1_theta_diagonal, theta_norm_squared

__all__ = [
    "SnapshotSet",
    "collect_snapshots",
    "snapshot_count",
    "ReducedBasis",
    "build_pod",
    "cumulative_energy",
    "energy_dimension",
    "LeftBasisStrategy",
    "IdentityTheta",
    "MatrixTheta",
    "L1Theta",
    "l1_theta_diagonal",
    "theta_norm_squared",
    "FullEvaluator",
    "ReducedSystem",
    "full_rule",
    "galerkin_reduced_residual",
    "pg_reduced_system",
    "solve_prom_step",
    "pg_step",
    "step_direction_error_check",
    "minimized_residual_norm",
    "QuadraticRomOperators",
    "PrecomputedSystem",
    "precompute_quadratic",
    "third_difference_check",
]
