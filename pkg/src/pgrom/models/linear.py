"""Linear and quadratic test models."""

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ..core import SemiDiscreteModel
from ..errors import ConfigurationError, ContractError

__all__ = ["LinearModel", "QuadraticModel", "QuadraticParts", "random_quadratic_model"]


class LinearModel(SemiDiscreteModel):
    """``f(u; t) = A u - b(t)`` with identity mass.

    ``b`` is a constant vector or a callable of time.  With ``spd=True`` the
    operator is checked for symmetry and positive definiteness (Cholesky).
    """

    def __init__(self, A, b=None, spd=False):
        A = sp.csr_matrix(A) if sp.issparse(A) else np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ContractError("operator must be square")
        self.A = A
        self._b = np.zeros(A.shape[0]) if b is None else b
        self.spd = bool(spd)
        if self.spd:
            dense = A.toarray() if sp.issparse(A) else A
            if np.max(np.abs(dense - dense.T)) >= 1e-12:
                raise ConfigurationError("operator flagged SPD is not symmetric")
            try:
                la.cholesky(dense)
            except la.LinAlgError as exc:
                raise ConfigurationError("operator flagged SPD is not positive definite") from exc

    @property
    def dim(self):
        return self.A.shape[0]

    def b(self, t=0.0):
        return np.asarray(self._b(t) if callable(self._b) else self._b, dtype=float)

    def f_eval(self, u, mu=None, t=0.0):
        return self.A @ np.asarray(u, dtype=float) - self.b(t)

    def jacobian(self, u=None, mu=None, t=0.0):
        return self.A

    def quadratic_parts(self):
        return QuadraticParts(-self.b(0.0), lambda X: self.A @ X, lambda X, Y: np.zeros_like(X))


class QuadraticParts:
    """``f(u) = constant + linear(u) + bilinear(u, u)``, evaluated column-wise."""

    def __init__(self, constant, linear, bilinear):
        self.constant = np.asarray(constant, dtype=float)
        self.linear = linear
        self.bilinear = bilinear


class QuadraticModel(SemiDiscreteModel):
    """``f(u) = c + A u + H(u, u)`` with a symmetric sparse bilinear form.

    ``H`` is stored as an ``(N, N*N)`` sparse matrix acting on ``kron(x, y)``
    and is symmetrized on construction, so ``H(x, y) = H(y, x)``.
    """

    def __init__(self, c, A, H):
        self.c = np.asarray(c, dtype=float)
        N = self.c.size
        self.A = sp.csr_matrix(A) if sp.issparse(A) else np.asarray(A, dtype=float)
        if self.A.shape != (N, N):
            raise ContractError("linear operator shape mismatch")
        H = sp.csr_matrix(H)
        if H.shape != (N, N * N):
            raise ContractError("bilinear form must have shape (N, N*N)")
        # symmetrize in the two input slots
        perm = (np.arange(N * N).reshape(N, N).T).ravel()
        self.H = ((H + H[:, perm]) * 0.5).tocsr()
        self._N = N

    @property
    def dim(self):
        return self._N

    def bilinear(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim == 1:
            return self.H @ np.outer(x, y).ravel()
        # column-wise pairs
        return np.column_stack([self.H @ np.outer(x[:, k], y[:, k]).ravel() for k in range(x.shape[1])])

    def f_eval(self, u, mu=None, t=0.0):
        u = np.asarray(u, dtype=float)
        return self.c + self.A @ u + self.bilinear(u, u)

    def jacobian(self, u, mu=None, t=0.0):
        u = np.asarray(u, dtype=float)
        N = self._N
        # d/du H(u,u) = 2 H(., u): contract the second slot with u
        K = sp.kron(sp.identity(N), sp.csr_matrix(u.reshape(-1, 1)))
        JH = 2.0 * (self.H @ K)
        return sp.csr_matrix(self.A) + JH

    def quadratic_parts(self):
        return QuadraticParts(self.c, lambda X: self.A @ X, self.bilinear)


def random_quadratic_model(N, density=0.02, scale=1.0, linear_shift=0.0, seed=0):
    """Random quadratic model used by tests and demos."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(N)
    A = rng.standard_normal((N, N)) / np.sqrt(N) + linear_shift * np.eye(N)
    H = sp.random(N, N * N, density=density, random_state=rng, data_rvs=rng.standard_normal)
    return QuadraticModel(c, A, scale * H)
