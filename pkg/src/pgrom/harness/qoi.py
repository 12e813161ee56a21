"""Quantities of interest and the relative-error metric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, ContractError
from ..models.spectral import SpectralNSModel

__all__ = [
    "QoIProbe",
    "relative_error",
    "compute_energy",
    "compute_enstrophy_dissipation",
    "evaluate_qoi",
]

KINDS = ("point_value", "volume_kinetic_energy", "enstrophy_dissipation", "integral_custom")


def relative_error(Q, Qtilde):
    """``100 |Q - Qtilde| / |Q|`` in percent over the sampled instants."""
    Q = np.asarray(Q, dtype=float)
    Qtilde = np.asarray(Qtilde, dtype=float)
    if Q.shape != Qtilde.shape:
        raise ContractError(f"series shapes differ: {Q.shape} vs {Qtilde.shape}")
    denom = np.linalg.norm(Q)
    if denom == 0:
        raise ContractError("relative error undefined for an identically zero reference")
    return 100.0 * float(np.linalg.norm(Q - Qtilde)) / float(denom)


def compute_energy(model, state):
    """Volume-averaged kinetic energy ``mean(|v|^2 / 2)``."""
    return model.kinetic_energy(state)


def compute_enstrophy_dissipation(model, state):
    """``2 nu mean(|omega|^2 / 2)`` with spectrally computed vorticity."""
    return model.enstrophy_dissipation(state)


@dataclass
class QoIProbe:
    """A scalar extracted from a full state.

    ``point_value`` reads the state at ``location`` (``component`` selects
    the velocity component for vector models); ``integral_custom`` applies
    ``params["fn"](model, u)``.
    """

    kind: str
    location: tuple | float | None = None
    component: int = 0
    params: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown QoI kind {self.kind!r}")
        if self.name is None:
            self.name = self.kind if self.location is None else f"{self.kind}_{self.component}"

    def bind(self, model):
        """Validate against ``model`` and return ``fn(u) -> float``."""
        if self.kind == "point_value":
            if self.location is None:
                raise ConfigurationError("point_value probe needs a location")
            if isinstance(model, SpectralNSModel):
                row = model.node_index(self.location) + self.component * model.cell_count
            elif hasattr(model, "cell_index"):
                row = model.cell_index(float(np.atleast_1d(self.location)[0]))
            else:
                row = int(np.atleast_1d(self.location)[0])
                if not 0 <= row < model.dim:
                    raise ConfigurationError(f"probe row {row} outside the state")
            return lambda u: float(u[row])
        if self.kind in ("volume_kinetic_energy", "enstrophy_dissipation"):
            if not isinstance(model, SpectralNSModel):
                raise ConfigurationError(f"{self.kind} needs a spectral flow model")
            fn = compute_energy if self.kind == "volume_kinetic_energy" else compute_enstrophy_dissipation
            return lambda u: fn(model, u)
        custom = self.params.get("fn")
        if not callable(custom):
            raise ConfigurationError("integral_custom probe needs a callable params['fn']")
        return lambda u: float(custom(model, u))


def evaluate_qoi(probe, model, states):
    """Apply ``probe`` to each column of ``states``."""
    fn = probe.bind(model)
    states = np.asarray(states)
    return np.array([fn(states[:, j]) for j in range(states.shape[1])])
