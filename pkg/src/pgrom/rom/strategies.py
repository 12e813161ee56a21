"""Left reduced-order basis strategies and residual weightings.

A strategy turns the current Jacobian-times-basis ``J V``, the residual
``r`` and the right basis rows into the test basis ``W``:

=================  =====================================
``galerkin``       ``W = V``
``lspg``           ``W = Psi J V`` (``Psi = I`` by default)
``theta_weighted`` ``W = Theta J V`` for a supplied SPD ``Theta``
``l1_irls``        ``W = Theta(r) J V``, ``Theta_ii = 1/|r_i|`` (1 if r_i = 0)
=================  =====================================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg as la

from ..errors import StrategyError

__all__ = [
    "LeftBasisStrategy",
    "IdentityTheta",
    "MatrixTheta",
    "L1Theta",
    "l1_theta_diagonal",
    "theta_norm_squared",
]

VARIANTS = ("galerkin", "lspg", "theta_weighted", "l1_irls")
POLICIES = ("per_iteration", "per_timestep")


def l1_theta_diagonal(r):
    """Diagonal weights making ``|r|_Theta^2`` equal ``|r|_1``."""
    r = np.asarray(r, dtype=float)
    a = np.abs(r)
    out = np.ones_like(a)
    nz = a != 0
    out[nz] = 1.0 / a[nz]
    return out


def theta_norm_squared(r, weight):
    r = np.asarray(r, dtype=float)
    if weight is None:
        return float(r @ r)
    weight = np.asarray(weight)
    if weight.ndim == 1:
        return float(np.sum(weight * r * r))
    return float(r @ weight @ r)


class IdentityTheta:
    def weight(self, r):
        return None


class MatrixTheta:
    """Constant SPD weighting; positive definiteness is checked by Cholesky."""

    def __init__(self, theta):
        theta = np.asarray(theta, dtype=float)
        try:
            la.cholesky(theta)
        except la.LinAlgError as exc:
            raise StrategyError("Theta is not symmetric positive definite") from exc
        self.theta = theta

    def weight(self, r):
        return self.theta


class L1Theta:
    def weight(self, r):
        return l1_theta_diagonal(r)


@dataclass
class LeftBasisStrategy:
    """How the test basis ``W`` is built and when it is refreshed.

    ``theta`` (for ``theta_weighted``) is either a fixed SPD matrix or a
    callable ``theta(u, J) -> matrix`` evaluated at the current state.
    ``psi`` optionally scales the ``lspg`` test basis.
    """

    variant: str = "lspg"
    recompute: str = "per_timestep"
    theta: Any = None
    psi: Any = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise StrategyError(f"unknown left-basis variant {self.variant!r}")
        if self.recompute not in POLICIES:
            raise StrategyError(f"unknown recompute policy {self.recompute!r}")
        if self.variant == "theta_weighted" and self.theta is None:
            raise StrategyError("theta_weighted needs an SPD Theta supplier")

    @classmethod
    def galerkin(cls):
        return cls("galerkin", "per_iteration")

    @classmethod
    def lspg(cls, recompute="per_timestep"):
        return cls("lspg", recompute)

    @property
    def is_galerkin(self):
        return self.variant == "galerkin"

    @property
    def frozen_per_solve(self):
        return self.recompute == "per_timestep" and not self.is_galerkin

    def theta_matrix(self, u=None, J=None, r=None):
        """The SPD weighting used by this strategy (None means identity)."""
        if self.variant == "l1_irls":
            return l1_theta_diagonal(r)
        if self.variant == "theta_weighted":
            theta = self.theta(u, J) if callable(self.theta) else self.theta
            theta = np.asarray(theta, dtype=float)
            try:
                la.cholesky(theta)
            except la.LinAlgError as exc:
                raise StrategyError("Theta is not symmetric positive definite") from exc
            return theta
        if self.variant == "lspg" and self.psi is not None:
            return np.asarray(self.psi, dtype=float)
        return None

    def theta_strategy(self):
        """Object with ``weight(r)`` for :func:`gauss_newton_solve`."""
        if self.variant == "l1_irls":
            return L1Theta()
        if self.variant == "theta_weighted" and not callable(self.theta):
            return MatrixTheta(self.theta)
        if self.variant == "lspg" and self.psi is not None:
            return MatrixTheta(self.psi)
        return IdentityTheta()

    def left_basis(self, V_rows, JV, r=None, u=None, J=None):
        """Test basis restricted to the rows of ``JV``/``V_rows``."""
        if self.variant == "galerkin":
            return V_rows
        theta = self.theta_matrix(u, J, r)
        if theta is None:
            return JV
        if theta.ndim == 1:
            return theta[:, None] * JV
        return theta @ JV
