"""Periodic incompressible Navier-Stokes, pseudo-spectral Fourier-Galerkin.

Rotational form on the cube ``[0, 2 pi L)^d``:

    dv/dt = -P(omega x v) - nu k^2 v_hat

where ``P`` is the divergence-free (Leray) projection and the product is
dealiased with the 2/3 rule.  The model state is the real velocity field
sampled on the collocation grid, components stacked ``(vx, vy[, vz])`` with
C-ordered grid indices; coefficients are obtained with ``rfftn``.
"""

import numpy as np
import scipy.sparse.linalg as spla

from ..core import SemiDiscreteModel, check_finite
from ..errors import ConfigurationError
from .linear import QuadraticParts

__all__ = ["SpectralNSModel", "SpectralJacobian", "tgv_initial_condition", "solenoidal_perturbation"]


class SpectralNSModel(SemiDiscreteModel):
    """Pseudo-spectral incompressible Navier-Stokes in 2-D or 3-D.

    Parameters
    ----------
    ndim : {2, 3}
    resolution : int
        Grid points per axis, a power of two.
    nu : float
        Kinematic viscosity.
    length : float
        Reference length ``L``; the domain side is ``2 pi L``.
    velocity : float
        Reference velocity ``V0`` (used by the initial condition).
    dealias : bool
        Apply 2/3-rule truncation to the nonlinear product.
    """

    def __init__(self, ndim=2, resolution=64, nu=1.0 / 1600, length=1.0, velocity=1.0, dealias=True):
        if ndim not in (2, 3):
            raise ConfigurationError("spatial dimension must be 2 or 3")
        n = int(resolution)
        if n < 4 or n & (n - 1):
            raise ConfigurationError(f"resolution {resolution} is not a power of two")
        if not nu > 0:
            raise ConfigurationError("viscosity must be positive")
        self.ndim = ndim
        self.n = n
        self.nu = float(nu)
        self.L = float(length)
        self.V0 = float(velocity)
        self.dealias = bool(dealias)

        self.grid_shape = (n,) * ndim
        self.axes = tuple(range(1, ndim + 1))
        m_full = np.fft.fftfreq(n, 1.0 / n)
        m_half = np.fft.rfftfreq(n, 1.0 / n)
        ms = [m_full] * (ndim - 1) + [m_half]
        M = np.meshgrid(*ms, indexing="ij")
        self.k = np.stack(M) / self.L  # (ndim, ...) physical wavenumbers
        self.k2 = np.sum(self.k**2, axis=0)
        self._k2_safe = np.where(self.k2 == 0.0, 1.0, self.k2)
        self.mask = np.all(np.abs(np.stack(M)) < n / 3.0, axis=0) if dealias else np.ones_like(self.k2, bool)

    # -- layout ----------------------------------------------------------
    @property
    def dim(self):
        return self.ndim * self.n**self.ndim

    @property
    def cell_count(self):
        return self.n**self.ndim

    @property
    def state_blocks(self):
        npts = self.n**self.ndim
        return [slice(c * npts, (c + 1) * npts) for c in range(self.ndim)]

    def cell_row_map(self):
        npts = self.n**self.ndim
        return np.arange(npts)[:, None] + npts * np.arange(self.ndim)[None, :]

    @property
    def coords(self):
        x = 2 * np.pi * self.L * np.arange(self.n) / self.n
        return np.meshgrid(*([x] * self.ndim), indexing="ij")

    def to_field(self, u):
        return np.asarray(u, dtype=float).reshape((self.ndim,) + self.grid_shape)

    def to_state(self, v):
        return np.asarray(v, dtype=float).reshape(-1)

    def forward(self, v):
        return np.fft.rfftn(v, axes=self.axes)

    def backward(self, vh):
        return np.fft.irfftn(vh, s=self.grid_shape, axes=self.axes)

    def node_index(self, point):
        """Flat grid index of the node nearest to ``point``."""
        h = 2 * np.pi * self.L / self.n
        idx = [int(round(p / h)) % self.n for p in point]
        return int(np.ravel_multi_index(idx, self.grid_shape))

    # -- spectral operators -----------------------------------------------
    def project(self, vh):
        kdotv = np.sum(self.k * vh, axis=0)
        return vh - self.k * (kdotv / self._k2_safe)

    def curl_hat(self, vh):
        ik = 1j * self.k
        if self.ndim == 2:
            return (ik[0] * vh[1] - ik[1] * vh[0])[None]
        return np.stack([
            ik[1] * vh[2] - ik[2] * vh[1],
            ik[2] * vh[0] - ik[0] * vh[2],
            ik[0] * vh[1] - ik[1] * vh[0],
        ])

    def divergence_hat(self, vh):
        return np.sum(1j * self.k * vh, axis=0)

    def _cross(self, w, v):
        """``omega x v`` in physical space; in 2-D omega is the z component."""
        if self.ndim == 2:
            return np.stack([-w[0] * v[1], w[0] * v[0]])
        return np.stack([
            w[1] * v[2] - w[2] * v[1],
            w[2] * v[0] - w[0] * v[2],
            w[0] * v[1] - w[1] * v[0],
        ])

    def nonlinear_hat(self, ah, bh):
        """Projected, dealiased ``omega(a) x v(b)`` in coefficient space."""
        m = self.mask
        w = self.backward(self.curl_hat(ah) * m)
        v = self.backward(bh * m)
        return self.project(self.forward(self._cross(w, v)) * m)

    def spectral_rhs(self, u_hat):
        """Right-hand side ``dv_hat/dt`` for coefficients ``u_hat``."""
        u_hat = np.asarray(u_hat)
        out = -self.nonlinear_hat(u_hat, u_hat) - self.nu * self.k2 * self.project(u_hat)
        if not np.all(np.isfinite(out)):
            check_finite(np.abs(out), "spectral right-hand side")
        return out

    # -- model contract ----------------------------------------------------
    def f_eval(self, u, mu=None, t=0.0):
        uh = self.forward(self.to_field(u))
        return self.to_state(self.backward(-self.spectral_rhs(uh)))

    def jacobian(self, u, mu=None, t=0.0):
        return SpectralJacobian(self, self.forward(self.to_field(u)))

    def linear_apply(self, X):
        """Viscous part ``nu k^2 P`` applied to the columns of X."""
        X = np.asarray(X, dtype=float)
        cols = X.reshape(self.dim, -1)
        out = np.empty_like(cols)
        for j in range(cols.shape[1]):
            vh = self.forward(self.to_field(cols[:, j]))
            out[:, j] = self.to_state(self.backward(self.nu * self.k2 * self.project(vh)))
        return out.reshape(X.shape)

    def bilinear(self, X, Y):
        """Symmetric bilinear form ``H(x, y)`` with ``f(u) = A u + H(u, u)``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        xs, ys = X.reshape(self.dim, -1), Y.reshape(self.dim, -1)
        out = np.empty_like(xs)
        for j in range(xs.shape[1]):
            ah = self.forward(self.to_field(xs[:, j]))
            bh = self.forward(self.to_field(ys[:, j]))
            nh = 0.5 * (self.nonlinear_hat(ah, bh) + self.nonlinear_hat(bh, ah))
            out[:, j] = self.to_state(self.backward(nh))
        return out.reshape(X.shape)

    def quadratic_parts(self):
        return QuadraticParts(np.zeros(self.dim), self.linear_apply, self.bilinear)

    # -- diagnostics -------------------------------------------------------
    def kinetic_energy(self, u):
        v = self.to_field(u)
        return 0.5 * float(np.mean(np.sum(v**2, axis=0)))

    def vorticity(self, u):
        return self.backward(self.curl_hat(self.forward(self.to_field(u))))

    def enstrophy_dissipation(self, u):
        w = self.vorticity(u)
        return 2.0 * self.nu * 0.5 * float(np.mean(np.sum(w**2, axis=0)))

    def max_divergence_hat(self, u):
        uh = self.forward(self.to_field(u))
        return float(np.max(np.abs(self.divergence_hat(uh))))


class SpectralJacobian(spla.LinearOperator):
    """Linearization of ``f`` about a state, optionally shifted by ``s I``.

    ``solve`` applies the inverse of the shifted viscous part only; Newton
    uses it as an approximate Jacobian inverse.
    """

    def __init__(self, model, u_hat, shift=0.0):
        super().__init__(float, (model.dim, model.dim))
        self.model = model
        self.u_hat = u_hat
        self.shift = float(shift)

    def shifted(self, s):
        return SpectralJacobian(self.model, self.u_hat, self.shift + s)

    def _matvec(self, d):
        m = self.model
        dh = m.forward(m.to_field(np.ravel(d)))
        nl = m.nonlinear_hat(self.u_hat, dh) + m.nonlinear_hat(dh, self.u_hat)
        out = nl + m.nu * m.k2 * m.project(dh)
        return m.to_state(m.backward(out)) + self.shift * np.ravel(d)

    def _matmat(self, X):
        return np.column_stack([self._matvec(X[:, j]) for j in range(X.shape[1])])

    def solve(self, rhs):
        m = self.model
        rh = m.forward(m.to_field(rhs))
        denom = self.shift + m.nu * m.k2
        denom = np.where(denom == 0.0, 1.0, denom)
        # gradient part of rhs is only shifted, solenoidal part also diffused
        sol = m.project(rh)
        grad = rh - sol
        out = sol / denom + grad / (self.shift if self.shift else 1.0)
        return m.to_state(m.backward(out))


def tgv_initial_condition(model):
    """Taylor-Green vortex velocity field as a model state.

    3-D uses ``vx = V0 sin(x/L) cos(y/L) cos(z/L)``,
    ``vy = -V0 cos(x/L) sin(y/L) cos(z/L)``, ``vz = 0``; 2-D drops the z factor.
    """
    if model.n & (model.n - 1):
        raise ConfigurationError("resolution must be a power of two")
    X = [c / model.L for c in model.coords]
    V0 = model.V0
    if model.ndim == 2:
        vx = V0 * np.sin(X[0]) * np.cos(X[1])
        vy = -V0 * np.cos(X[0]) * np.sin(X[1])
        v = np.stack([vx, vy])
    else:
        vx = V0 * np.sin(X[0]) * np.cos(X[1]) * np.cos(X[2])
        vy = -V0 * np.cos(X[0]) * np.sin(X[1]) * np.cos(X[2])
        v = np.stack([vx, vy, np.zeros_like(vx)])
    return model.to_state(v)


def solenoidal_perturbation(model, amplitude, kmin=2, kmax=3, seed=0):
    """Seeded divergence-free field from integer wavenumbers ``kmin <= max|m_i| <= kmax``.

    With the default ``kmin = 2`` the field is orthogonal to the Taylor-Green
    modes, so it adds its own energy without a cross term.  It is scaled so
    its largest velocity component equals ``amplitude``.
    """
    rng = np.random.default_rng(seed)
    shape = (model.ndim,) + model.k2.shape
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    modes = np.max(np.abs(model.k * model.L), axis=0)
    coef *= (modes <= kmax) & (modes >= max(kmin, 1))
    field = model.backward(model.project(coef))
    peak = np.max(np.abs(field))
    if peak == 0 or amplitude == 0:
        return np.zeros(model.dim)
    return model.to_state(field * (amplitude / peak))
