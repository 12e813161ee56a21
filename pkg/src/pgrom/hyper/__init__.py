"""ECSW hyperreduction."""

from .ecsw import (
    EcswSampleSet,
    EcswTrainingSystem,
    HyperEvaluator,
    HyperreducedSystem,
    assemble_training,
    hyperreduced_residual,
    nnls_solve,
    train_ecsw,
)
from .nnls import lawson_hanson

__all__ = [
    "EcswTrainingSystem",
    "EcswSampleSet",
    "assemble_training",
    "nnls_solve",
    "train_ecsw",
    "lawson_hanson",
    "HyperEvaluator",
    "HyperreducedSystem",
    "hyperreduced_residual",
]
