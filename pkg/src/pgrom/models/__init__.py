"""Built-in desk-scale high-dimensional models."""

from .burgers import BurgersModel, RestrictedBurgers
from .linear import LinearModel, QuadraticModel, QuadraticParts, random_quadratic_model
from .spectral import SpectralNSModel, solenoidal_perturbation, tgv_initial_condition

__all__ = [
    "BurgersModel",
    "RestrictedBurgers",
    "LinearModel",
    "QuadraticModel",
    "QuadraticParts",
    "random_quadratic_model",
    "SpectralNSModel",
    "tgv_initial_condition",
    "solenoidal_perturbation",
]
