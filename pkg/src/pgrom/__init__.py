"""Galerkin and Petrov-Galerkin projection-based reduced-order models."""

__version__ = "0.1.0"
