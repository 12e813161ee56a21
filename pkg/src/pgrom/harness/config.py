"""INI experiment configuration.

Example::

    [model]
    kind = burgers          ; burgers | spectral
    n_cells = 2048
    nu = 1e-4

    [time]
    scheme = dirk2
    dt = 1e-3
    t_end = 3.0

    [snapshots]
    delta_s = 0.01
    t_start = 0.0
    t_end = 2.0

    [pod]
    criteria = 0.9, 0.99, 0.999, 0.9999
    normalize = true

    [rom]
    strategies = galerkin, lspg
    recompute = per_timestep

    [ecsw]
    epsilon = 1e-2
    stride = 10
    strategies = lspg

    [qoi]
    probes = point_value@0.75

    [report]
    delta_s = 0.01
    stages = hdm, pod, rom, ecsw, hprom, compare

Every key has a default (see ``DEFAULTS``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigurationError

__all__ = ["DEFAULTS", "ExperimentConfig", "load_config", "STAGES"]

STAGES = ("hdm", "pod", "rom", "ecsw", "hprom", "compare")

DEFAULTS = {
    "model": {
        "kind": "burgers",
        "n_cells": "2048",
        "nu": "1e-4",
        "length": "1.0",
        "order": "1",
        "initial": "sine",
        "amplitude": "0.5",
        "ndim": "2",
        "resolution": "128",
        "velocity": "1.0",
        "perturbation": "0.0",
    },
    "time": {"scheme": "dirk2", "dt": "1e-3", "t_end": "3.0", "t_start": "0.0"},
    "snapshots": {"delta_s": "0.01", "t_start": "0.0", "t_end": "2.0"},
    "pod": {"criteria": "0.9, 0.99, 0.999, 0.9999", "normalize": "true", "offset": "auto"},
    "rom": {"strategies": "galerkin, lspg", "recompute": "per_timestep", "scheme": "", "precompute": "auto"},
    "ecsw": {"epsilon": "1e-2", "stride": "10", "strategies": "lspg"},
    "qoi": {"probes": "point_value@0.75"},
    "report": {"delta_s": "0.01", "stages": ", ".join(STAGES)},
}


def _list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


@dataclass
class ExperimentConfig:
    parser: configparser.ConfigParser
    seed: int = 0

    def get(self, section, key):
        return self.parser.get(section, key)

    def getfloat(self, section, key):
        try:
            return self.parser.getfloat(section, key)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key} is not a number") from exc

    def getint(self, section, key):
        try:
            return self.parser.getint(section, key)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key} is not an integer") from exc

    def getbool(self, section, key):
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key} is not a boolean") from exc

    def getlist(self, section, key):
        return _list(self.parser.get(section, key))

    @property
    def stages(self):
        stages = [s.lower() for s in self.getlist("report", "stages")]
        unknown = set(stages) - set(STAGES)
        if unknown:
            raise ConfigurationError(f"unknown pipeline stages {sorted(unknown)}")
        return stages

    @property
    def criteria(self):
        out = []
        for item in self.getlist("pod", "criteria"):
            value = float(item)
            out.append(int(value) if value >= 1 else value)
        return out

    def as_dict(self):
        return {s: dict(self.parser.items(s)) for s in self.parser.sections()}

    def with_overrides(self, overrides):
        """Copy with ``{section: {key: value}}`` applied."""
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read_dict(self.as_dict())
        parser.read_dict({s: {k: str(v) for k, v in kv.items()} for s, kv in overrides.items()})
        return ExperimentConfig(parser, self.seed)


def load_config(source=None, overrides=None, seed=0):
    """Build a configuration from a file path, INI text, or nothing.

    ``overrides`` is a ``{section: {key: value}}`` mapping applied last.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_dict(DEFAULTS)
    if source is not None:
        try:
            if isinstance(source, str) and "[" in source:
                parser.read_string(source)
            elif Path(source).is_file():
                parser.read(source)
            else:
                raise ConfigurationError(f"configuration file {source} not found")
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed configuration: {exc}") from exc
    if overrides:
        parser.read_dict({s: {k: str(v) for k, v in kv.items()} for s, kv in overrides.items()})
    unknown = set(parser.sections()) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown configuration sections {sorted(unknown)}")
    return ExperimentConfig(parser, int(seed))
