"""Proper orthogonal decomposition of snapshot sets."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from ..errors import ConfigurationError, DegenerateBasisError

__all__ = ["ReducedBasis", "build_pod", "energy_dimension", "cumulative_energy"]


@dataclass
class ReducedBasis:
    """Affine subspace ``u0 + span(V)`` with orthonormal ``V``."""

    u0: np.ndarray
    V: np.ndarray
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    criterion: float | int | None = None
    scales: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        self.V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if self.V.shape[0] != self.u0.size:
            raise ConfigurationError("offset and basis dimensions disagree")

    @property
    def n(self):
        return self.V.shape[1]

    @property
    def N(self):
        return self.V.shape[0]

    def reconstruct(self, y):
        y = np.asarray(y)
        if y.ndim == 2:
            return self.u0[:, None] + self.V @ y
        return self.u0 + self.V @ y

    def project(self, u):
        """Reduced coordinates of the orthogonal projection of ``u``."""
        u = np.asarray(u)
        if u.ndim == 2:
            return self.V.T @ (u - self.u0[:, None])
        return self.V.T @ (u - self.u0)

    def truncate(self, n):
        return ReducedBasis(self.u0, self.V[:, :n], self.singular_values, n, self.scales, dict(self.meta))

    def orthonormality_error(self):
        return float(np.max(np.abs(self.V.T @ self.V - np.eye(self.n))))

    def provenance_hash(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.u0).tobytes())
        h.update(np.ascontiguousarray(self.V).tobytes())
        return h.hexdigest()[:16]


def cumulative_energy(singular_values):
    s2 = np.asarray(singular_values, dtype=float) ** 2
    total = s2.sum()
    if total == 0:
        raise DegenerateBasisError("all singular values are zero")
    return np.cumsum(s2) / total


def energy_dimension(singular_values, fraction):
    """Smallest ``n`` whose leading squared singular values hold ``fraction``."""
    if not 0 < fraction < 1:
        raise ConfigurationError("energy fraction must lie in (0, 1)")
    energy = cumulative_energy(singular_values)
    return int(np.searchsorted(energy, fraction - 1e-13) + 1)


def _fix_signs(U):
    # deterministic orientation: largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def build_pod(snapshots, u0=None, criterion=0.999, normalize=True, blocks=None):
    """Build a POD basis from snapshot columns.

    Parameters
    ----------
    snapshots : SnapshotSet or ndarray (N, m)
    u0 : ndarray, optional
        Affine offset subtracted from every column (zero by default).
    criterion : float or int
        Energy fraction in (0, 1) of the squared singular values, or an
        explicit basis dimension.
    normalize : bool
        Scale each state block by its largest absolute value over the
        (offset-subtracted) snapshots before the SVD.  The returned basis
        spans the corresponding subspace of the unscaled state and is
        re-orthonormalized.
    blocks : list of slice, optional
        State blocks for normalization; one block by default.
    """
    S = snapshots.states if hasattr(snapshots, "states") else np.asarray(snapshots, dtype=float)
    if S.ndim != 2 or S.shape[1] < 1:
        raise ConfigurationError("need at least one snapshot")
    N, m = S.shape
    u0 = np.zeros(N) if u0 is None else np.asarray(u0, dtype=float)
    X = S - u0[:, None]
    if not np.any(X):
        raise DegenerateBasisError("snapshot matrix is zero after offset subtraction")

    blocks = blocks or [slice(0, N)]
    scales = np.ones(len(blocks))
    d = np.ones(N)
    if normalize:
        for i, blk in enumerate(blocks):
            peak = np.max(np.abs(X[blk]))
            scales[i] = peak if peak > 0 else 1.0
            d[blk] = scales[i]
        X = X / d[:, None]

    U, s, _ = la.svd(X, full_matrices=False, lapack_driver="gesdd")
    if isinstance(criterion, (int, np.integer)) and not isinstance(criterion, bool):
        n = int(criterion)
        if not 1 <= n <= m:
            raise ConfigurationError(f"basis dimension {n} outside [1, {m}]")
    else:
        n = energy_dimension(s, float(criterion))
    Un = U[:, :n]
    if normalize and np.ptp(scales) > 0:
        Un, _ = la.qr(d[:, None] * Un, mode="economic")
    V = _fix_signs(Un)
    meta = {"normalized": bool(normalize), "snapshots": int(m)}
    return ReducedBasis(u0, V, s, criterion, scales, meta)
