"""Experiment harness: configuration, snapshot files, QoIs, pipeline and CLI."""

from .config import DEFAULTS, ExperimentConfig, load_config
from .pipeline import Pipeline, RunReport, build_model, initial_state, run_experiment
from .qoi import QoIProbe, compute_energy, compute_enstrophy_dissipation, evaluate_qoi, relative_error
from .snapio import read_snapshots, write_snapshots

__all__ = [
    "DEFAULTS",
    "ExperimentConfig",
    "load_config",
    "Pipeline",
    "RunReport",
    "build_model",
    "initial_state",
    "run_experiment",
    "QoIProbe",
    "compute_energy",
    "compute_enstrophy_dissipation",
    "evaluate_qoi",
    "relative_error",
    "read_snapshots",
    "write_snapshots",
]
