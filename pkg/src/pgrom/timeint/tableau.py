"""Butcher tableaux of the singly diagonally implicit schemes."""

from dataclasses import dataclass

import numpy as np

__all__ = ["ButcherTableau", "dirk2_tableau", "dirk3_tableau", "get_tableau"]


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    @property
    def stages(self):
        return self.b.size

    def check(self, tol=1e-14):
        """Raise ValueError if a structural invariant is violated."""
        A = self.A
        if np.any(np.triu(A, 1) != 0):
            raise ValueError("tableau is not lower triangular")
        if np.max(np.abs(A.sum(axis=1) - self.c)) > tol:
            raise ValueError("row sums of A differ from c")
        if abs(self.b.sum() - 1.0) > tol:
            raise ValueError("weights do not sum to one")
        d = np.diag(A)
        if np.max(np.abs(d - d[0])) > tol:
            raise ValueError("diagonal entries differ")
        return self


def dirk2_tableau():
    """Two-stage, second-order, L-stable SDIRK with ``alpha = 1 - sqrt(2)/2``."""
    a = 1.0 / (2.0 + np.sqrt(2.0))  # = 1 - sqrt(2)/2, correctly rounded in this form
    A = np.array([[a, 0.0], [1.0 - a, a]])
    return ButcherTableau("dirk2", A, np.array([1.0 - a, a]), np.array([a, 1.0]), 2)


def dirk3_tableau():
    """Three-stage, third-order, L-stable SDIRK."""
    theta = np.arctan(np.sqrt(2.0) / 4.0) / 3.0
    a = 1.0 + np.sqrt(6.0) / 2.0 * np.sin(theta) - np.sqrt(2.0) / 2.0 * np.cos(theta)
    tau2 = (1.0 + a) / 2.0
    b1 = -(6.0 * a**2 - 16.0 * a + 1.0) / 4.0
    b2 = (6.0 * a**2 - 20.0 * a + 5.0) / 4.0
    A = np.array([[a, 0.0, 0.0], [tau2 - a, a, 0.0], [b1, b2, a]])
    return ButcherTableau("dirk3", A, np.array([b1, b2, a]), np.array([a, tau2, 1.0]), 3)


def get_tableau(name):
    try:
        return {"dirk2": dirk2_tableau, "dirk3": dirk3_tableau}[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown DIRK scheme {name!r}") from None
