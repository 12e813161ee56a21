"""Energy-conserving sampling and weighting (ECSW).

Offline, every mesh cell's contribution to the projected residual is
recorded at a set of training states.  The matrix ``G`` has one column per
cell; for each training state it holds ``n`` rows for the nonlinear term
``W_e^T f_e`` and ``n`` rows for the mass term ``W_e^T (M u')_e``.  Its row
sums ``b`` are the exact projections.  A sparse nonnegative ``xi`` with
``|G xi - b| <= eps |b|`` selects the reduced mesh.

Online, only sampled cells and their stencils are evaluated, and the
reduced residual is ``sum_e xi_e W_e^T r_e``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import StageRule, apply_operator
from ..errors import ConfigurationError, InapplicableError, SampleCorruptionError
from ..rom.prom import ReducedSystem
from ..rom.strategies import LeftBasisStrategy
from ..timeint.solvers import NewtonConfig
from .nnls import lawson_hanson

__all__ = [
    "EcswTrainingSystem",
    "EcswSampleSet",
    "assemble_training",
    "nnls_solve",
    "train_ecsw",
    "HyperEvaluator",
    "HyperreducedSystem",
    "hyperreduced_residual",
]


@dataclass
class EcswTrainingSystem:
    G: np.ndarray  # (2 n n_train, n_cells)
    b: np.ndarray
    snapshot_indices: np.ndarray
    epsilon: float = 1e-2
    meta: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return self.G.shape[1]

    def identity_error(self):
        """``max |G 1 - b|`` (zero up to roundoff by construction)."""
        return float(np.max(np.abs(self.G.sum(axis=1) - self.b)))


@dataclass
class EcswSampleSet:
    """Sampled cells with strictly positive weights."""

    cells: np.ndarray
    weights: np.ndarray
    residual: float
    epsilon: float
    basis_hash: str | None = None
    n_cells: int | None = None

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=int)
        self.weights = np.asarray(self.weights, dtype=float)

    def __len__(self):
        return self.cells.size

    def validate(self, n_cells=None):
        n_cells = self.n_cells if n_cells is None else n_cells
        if self.cells.size == 0:
            raise SampleCorruptionError("sample set is empty")
        if self.cells.shape != self.weights.shape:
            raise SampleCorruptionError("cells and weights differ in length")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise SampleCorruptionError("sample weights must be finite and positive")
        if np.unique(self.cells).size != self.cells.size:
            raise SampleCorruptionError("duplicate sampled cells")
        if self.cells.min() < 0 or (n_cells is not None and self.cells.max() >= n_cells):
            raise SampleCorruptionError(f"sampled cell index out of range [0, {n_cells})")
        return self

    def save(self, path):
        data = {
            "cells": self.cells.tolist(),
            "weights": [float(w).hex() for w in self.weights],
            "residual": self.residual,
            "epsilon": self.epsilon,
            "basis_hash": self.basis_hash,
            "n_cells": self.n_cells,
        }
        Path(path).write_text(json.dumps(data, indent=1))

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
            return cls(
                data["cells"],
                [float.fromhex(w) for w in data["weights"]],
                data["residual"],
                data["epsilon"],
                data.get("basis_hash"),
                data.get("n_cells"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SampleCorruptionError(f"unreadable sample set {path}: {exc}") from exc

    @classmethod
    def full(cls, n_cells, basis_hash=None):
        """All cells with unit weights."""
        return cls(np.arange(n_cells), np.ones(n_cells), 0.0, 0.0, basis_hash, n_cells)


def _training_states(snapshots):
    S = snapshots.states if hasattr(snapshots, "states") else np.asarray(snapshots, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if S.size == 0 or S.shape[1] == 0:
        raise ConfigurationError("ECSW training needs at least one snapshot")
    return S


def _cell_sums(model, X):
    """Sum the rows of ``X`` (N, n) owned by each cell -> (n, n_cells)."""
    rowmap = model.cell_row_map()
    return X[rowmap].sum(axis=1).T


def assemble_training(model, basis, strategy=None, training_snapshots=None, mu=None, epsilon=1e-2, velocities=None):
    """Build the ECSW training system.

    Training states are the projections ``u0 + V V^T (u - u0)`` of the given
    snapshots.  Their velocities default to ``-V V^T f`` (the Galerkin
    velocity on the subspace) unless supplied as columns of ``velocities``.
    The test basis is formed at each training state, mirroring the
    per-solve freeze used online.
    """
    if not model.has_identity_mass:
        raise InapplicableError("ECSW assembly is implemented for identity mass matrices")
    strategy = strategy or LeftBasisStrategy.lspg()
    S = _training_states(training_snapshots)
    mu = model.validate_mu(mu)
    V = basis.V
    ns = S.shape[1]
    blocks = []
    for s in range(ns):
        y = basis.project(S[:, s])
        u = basis.reconstruct(y)
        f = model.f_eval(u, mu)
        udot = V @ (V.T @ -f) if velocities is None else V @ basis.V.T @ velocities[:, s]
        J = model.jacobian(u, mu) if strategy.variant == "theta_weighted" else None
        JV = model.jac_times(u, V, mu)
        W = strategy.left_basis(V, JV, f + udot, u, J)
        blocks.append(_cell_sums(model, W * f[:, None]))
        blocks.append(_cell_sums(model, W * model.mass_apply(udot)[:, None]))
    G = np.vstack(blocks)
    meta = {"basis": basis.provenance_hash(), "strategy": strategy.variant, "n": basis.n}
    return EcswTrainingSystem(G, G.sum(axis=1), np.arange(ns), epsilon, meta)


def nnls_solve(G, b, epsilon=1e-2, max_iter=None, basis_hash=None):
    """Sparse nonnegative cell weights with ``|G xi - b| <= epsilon |b|``."""
    if not 0 < epsilon < 1:
        raise ConfigurationError("ECSW tolerance must lie in (0, 1)")
    x, rnorm, _ = lawson_hanson(G, b, epsilon, max_iter)
    cells = np.flatnonzero(x > 0)
    bnorm = float(np.linalg.norm(b))
    rel = rnorm / bnorm if bnorm > 0 else 0.0
    return EcswSampleSet(cells, x[cells], rel, epsilon, basis_hash, np.asarray(G).shape[1])


def train_ecsw(model, basis, strategy, training_snapshots, epsilon=1e-2, mu=None, velocities=None):
    system = assemble_training(model, basis, strategy, training_snapshots, mu, epsilon, velocities)
    return nnls_solve(system.G, system.b, epsilon, basis_hash=basis.provenance_hash())


class _FullRowRestriction:
    """Fallback for models without a reduced-mesh evaluator: evaluates all
    of ``f`` and keeps the sampled rows (correct, but not ``N``-independent)."""

    def __init__(self, model, cells, mu):
        self.model = model
        self.mu = mu
        self.mesh_nodes = np.arange(model.dim)
        self.rows = model.cell_row_map()[cells].ravel()
        self.row_positions = self.rows
        self.cells_evaluated = set()

    def f(self, u, t=0.0):
        self.cells_evaluated.update(range(self.model.cell_count))
        return self.model.f_eval(u, self.mu, t)[self.rows]

    def jac_times(self, u, V, t=0.0):
        return apply_operator(self.model.jacobian(u, self.mu, t), V)[self.rows]


class HyperEvaluator:
    """Residual and ``J V`` rows on the sampled cells only."""

    hyperreduced = True

    def __init__(self, model, basis, sample, mu=None):
        if not model.has_identity_mass:
            raise InapplicableError("hyperreduced evaluation needs an identity mass matrix")
        sample.validate(model.cell_count)
        if sample.basis_hash is not None and sample.basis_hash != basis.provenance_hash():
            raise SampleCorruptionError("sample set was trained on a different basis")
        self.model = model
        self.basis = basis
        self.sample = sample
        self.mu = model.validate_mu(mu)
        order = np.argsort(sample.cells)
        cells, xi = sample.cells[order], sample.weights[order]
        self.restricted = model.restrict(cells) or _FullRowRestriction(model, cells, self.mu)
        per_cell = model.cell_row_map().shape[1]
        self.weights = np.repeat(xi, per_cell)
        mesh = self.restricted.mesh_nodes
        rows = self.restricted.rows
        self.u0_mesh = basis.u0[mesh]
        self.V_mesh = basis.V[mesh]
        self.V_rows = basis.V[rows]

    def evaluate(self, y, rule, need_jacobian=False):
        rule = rule or StageRule.steady()
        u_mesh = self.u0_mesh + self.V_mesh @ y
        r = self.restricted.f(u_mesh, rule.t)
        JV = self.restricted.jac_times(u_mesh, self.V_mesh, rule.t)
        if not rule.is_steady:
            r = r + self.V_rows @ ((y - rule.base) / rule.gamma)
            JV = JV + self.V_rows / rule.gamma
        return r, JV, None, None


class HyperreducedSystem(ReducedSystem):
    """Reduced system assembled from the ECSW reduced mesh."""

    def __init__(self, model, basis, sample, strategy=None, mu=None, config=NewtonConfig(xtol=1e-12)):
        strategy = strategy or LeftBasisStrategy.lspg()
        if strategy.variant == "theta_weighted":
            raise InapplicableError("theta_weighted needs the full Jacobian and cannot be hyperreduced")
        super().__init__(HyperEvaluator(model, basis, sample, mu), strategy, config)


def hyperreduced_residual(model, basis, strategy, sample, y, mu=None, rule=None):
    """``sum_e xi_e W_e^T r_e(u0 + V y)`` over the sampled cells."""
    system = HyperreducedSystem(model, basis, sample, strategy, mu)
    return system.reduced_quantities(np.asarray(y, dtype=float), rule)[0]
