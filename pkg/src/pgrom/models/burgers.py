"""Periodic viscous Burgers equation, upwind finite volumes.

Cell ``i`` carries the cell average ``u_i``.  The semi-discrete term is

    f_i = (F_{i+1/2} - F_{i-1/2}) / dx - nu (u_{i+1} - 2 u_i + u_{i-1}) / dx^2

with the Engquist-Osher upwind flux for ``u^2 / 2``

    F(uL, uR) = max(uL, 0)^2 / 2 + min(uR, 0)^2 / 2,

which picks the upwind side from the sign of the local convective speed
and is continuously differentiable.  ``order=2`` uses unlimited linear
upwind reconstruction of the face states.
"""

import numpy as np
import scipy.sparse as sp

from ..core import SemiDiscreteModel, check_finite
from ..errors import ConfigurationError

__all__ = ["BurgersModel", "RestrictedBurgers"]

# face reconstruction weights relative to the left cell i of face i+1/2
_LEFT = {1: {0: 1.0}, 2: {0: 1.5, -1: -0.5}}
_RIGHT = {1: {1: 1.0}, 2: {1: 1.5, 2: -0.5}}


class BurgersModel(SemiDiscreteModel):
    """Viscous Burgers HDM on a periodic grid of ``n_cells`` cells.

    Parameters
    ----------
    n_cells : int
        Number of finite-volume cells ``N``.
    nu : float
        Kinematic viscosity (zero gives the inviscid scheme); the Reynolds number is ``V * length / nu``.
    length : float
        Domain length ``Lx``.
    order : {1, 2}
        Upwind reconstruction order.
    """

    def __init__(self, n_cells, nu, length=1.0, order=1):
        if n_cells < 3:
            raise ConfigurationError("Burgers model needs at least 3 cells")
        if not nu >= 0:
            raise ConfigurationError("viscosity must be non-negative")
        if order not in (1, 2):
            raise ConfigurationError("upwind order must be 1 or 2")
        self.n = int(n_cells)
        self.nu = float(nu)
        self.length = float(length)
        self.order = int(order)
        self.dx = self.length / self.n
        self._width = order  # stencil half-width

    @property
    def dim(self):
        return self.n

    @property
    def x(self):
        return (np.arange(self.n) + 0.5) * self.dx

    def reynolds(self, velocity=1.0):
        return velocity * self.length / self.nu

    def cell_index(self, x):
        return int(np.floor((x % self.length) / self.dx)) % self.n

    # -- evaluation on stencil-local arrays ----------------------------------
    def _f_from_stencil(self, U):
        """``U[:, w + s]`` holds ``u_{i+s}`` for s in [-w, w]; returns f_i."""
        w = self._width
        flux_r = self._face_flux(U, w)
        flux_l = self._face_flux(U, w - 1)
        diff = U[:, w + 1] - 2.0 * U[:, w] + U[:, w - 1]
        return (flux_r - flux_l) / self.dx - self.nu * diff / self.dx**2

    def _face_states(self, U, c):
        # face between column c and c+1 of the stencil
        uL = sum(a * U[:, c + s] for s, a in _LEFT[self.order].items())
        uR = sum(a * U[:, c + s] for s, a in _RIGHT[self.order].items())
        return uL, uR

    def _face_flux(self, U, c):
        uL, uR = self._face_states(U, c)
        return 0.5 * np.maximum(uL, 0.0) ** 2 + 0.5 * np.minimum(uR, 0.0) ** 2

    def _stencil_derivatives(self, U):
        """d f_i / d u_{i+s}, shape (cells, 2w+1)."""
        w = self._width
        D = np.zeros_like(U)
        for c, sign in ((w, 1.0), (w - 1, -1.0)):
            uL, uR = self._face_states(U, c)
            pl, mr = np.maximum(uL, 0.0), np.minimum(uR, 0.0)
            for s, a in _LEFT[self.order].items():
                D[:, c + s] += sign * pl * a / self.dx
            for s, a in _RIGHT[self.order].items():
                D[:, c + s] += sign * mr * a / self.dx
        visc = self.nu / self.dx**2
        D[:, w - 1] -= visc
        D[:, w] += 2.0 * visc
        D[:, w + 1] -= visc
        return D

    def _stencil(self, u):
        w = self._width
        return np.stack([np.roll(u, -s) for s in range(-w, w + 1)], axis=1)

    # -- contract --------------------------------------------------------
    def f_eval(self, u, mu=None, t=0.0):
        u = np.asarray(u, dtype=float)
        return self._f_from_stencil(self._stencil(u))

    def jacobian(self, u, mu=None, t=0.0):
        u = np.asarray(u, dtype=float)
        D = self._stencil_derivatives(self._stencil(u))
        w = self._width
        rows = np.repeat(np.arange(self.n), 2 * w + 1)
        cols = (np.arange(self.n)[:, None] + np.arange(-w, w + 1)[None, :]) % self.n
        return sp.csr_matrix((D.ravel(), (rows, cols.ravel())), shape=(self.n, self.n))

    def jac_times(self, u, X, mu=None, t=0.0):
        u = np.asarray(u, dtype=float)
        X = np.asarray(X, dtype=float)
        D = self._stencil_derivatives(self._stencil(u))
        w = self._width
        out = np.zeros_like(X)
        for s in range(-w, w + 1):
            coef = D[:, w + s] if X.ndim == 1 else D[:, w + s, None]
            out += coef * np.roll(X, -s, axis=0)
        return out

    def stencil_of(self, cells):
        w = self._width
        cells = np.asarray(cells, dtype=int)
        return (cells[:, None] + np.arange(-w, w + 1)[None, :]) % self.n

    def restrict(self, cells):
        return RestrictedBurgers(self, cells)

    def energy(self, u):
        return float(np.sum(np.asarray(u) ** 2) * self.dx)


class RestrictedBurgers:
    """Evaluates ``f`` and its Jacobian rows on a subset of cells only.

    The reduced mesh is the union of the sampled cells' stencils; all
    inputs are given as values on ``mesh_nodes`` (sorted).  ``cells_evaluated``
    records every cell whose residual was computed, for instrumentation.
    """

    def __init__(self, model, cells):
        self.model = model
        self.cells = np.asarray(cells, dtype=int)
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= model.n):
            raise IndexError("cell index out of range")
        stencil = model.stencil_of(self.cells)
        self.mesh_nodes = np.unique(stencil)
        self.local_stencil = np.searchsorted(self.mesh_nodes, stencil)
        self.rows = self.cells
        self.row_positions = np.searchsorted(self.mesh_nodes, self.cells)
        self.cells_evaluated = set()

    def f(self, u_mesh, t=0.0):
        self.cells_evaluated.update(self.cells.tolist())
        return check_finite(self.model._f_from_stencil(u_mesh[self.local_stencil]), "restricted f")

    def jac_times(self, u_mesh, V_mesh, t=0.0):
        """Rows of ``J V`` for the sampled cells, shape (cells, n)."""
        D = self.model._stencil_derivatives(u_mesh[self.local_stencil])
        out = np.zeros((self.cells.size, V_mesh.shape[1]))
        for s in range(D.shape[1]):
            out += D[:, s, None] * V_mesh[self.local_stencil[:, s]]
        return out
