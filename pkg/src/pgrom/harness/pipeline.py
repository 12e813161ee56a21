"""Experiment pipeline: HDM, snapshots, POD, PROM, ECSW, HPROM, comparison.

Stages share artifacts in memory and, when an output directory is given,
on disk, so a later stage can be run on its own from an earlier run's
output::

    hdm.bin, snapshots.bin         recorded HDM states / training snapshots
    basis_<i>.bin, basis_<i>.json  POD bases (offset first, then columns)
    ecsw_<i>_<strategy>.json       ECSW sample sets
    runs.json                      reduced-model QoI histories and timings
    <run>__<qoi>.csv               one ``t,value`` file per run and QoI
    report.json                    errors, timings, stability classification
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, InapplicableError, PipelineError
from ..hyper.ecsw import EcswSampleSet, HyperreducedSystem, train_ecsw
from ..models.burgers import BurgersModel
from ..models.spectral import SpectralNSModel, solenoidal_perturbation, tgv_initial_condition
from ..rom.pod import ReducedBasis, build_pod
from ..rom.precompute import PrecomputedSystem, precompute_quadratic
from ..rom.prom import FullEvaluator, ReducedSystem
from ..rom.snapshots import SnapshotSet, _steps_per_sample, collect_snapshots
from ..rom.strategies import LeftBasisStrategy
from ..timeint.integrators import FullOrderSystem, integrate
from ..timeint.solvers import NewtonConfig
from .config import STAGES, load_config
from .qoi import QoIProbe, evaluate_qoi, relative_error
from .snapio import read_snapshots, write_snapshots

__all__ = ["RunReport", "Pipeline", "run_experiment", "build_model", "initial_state", "parse_probes"]

# stage -> artifacts it needs from earlier stages
REQUIRES = {
    "hdm": (),
    "pod": ("snapshots",),
    "rom": ("bases",),
    "ecsw": ("bases", "snapshots"),
    "hprom": ("bases", "samples"),
    "compare": ("hdm",),
}


@dataclass
class RunReport:
    histories: dict = field(default_factory=dict)  # run -> qoi -> list
    times: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)  # run -> qoi -> RE percent (None if diverged)
    timings: dict = field(default_factory=dict)  # run -> seconds
    classification: dict = field(default_factory=dict)  # run -> "completed" | {"diverged_at": t}
    info: dict = field(default_factory=dict)  # run -> details (n, sample size, ...)
    config: dict = field(default_factory=dict)
    provenance: str = ""

    def to_json(self):
        data = asdict(self)
        data.pop("histories")
        data.pop("times")
        return data


def build_model(cfg):
    kind = cfg.get("model", "kind").lower()
    if kind == "burgers":
        return BurgersModel(
            cfg.getint("model", "n_cells"),
            cfg.getfloat("model", "nu"),
            cfg.getfloat("model", "length"),
            cfg.getint("model", "order"),
        )
    if kind == "spectral":
        return SpectralNSModel(
            cfg.getint("model", "ndim"),
            cfg.getint("model", "resolution"),
            cfg.getfloat("model", "nu"),
            cfg.getfloat("model", "length"),
            cfg.getfloat("model", "velocity"),
        )
    raise ConfigurationError(f"unknown model kind {kind!r}")


def initial_state(model, cfg):
    if isinstance(model, BurgersModel):
        amp = cfg.getfloat("model", "amplitude")
        return 1.0 + amp * np.sin(2 * np.pi * model.x / model.length)
    u = tgv_initial_condition(model)
    eps = cfg.getfloat("model", "perturbation")
    if eps:
        u = u + solenoidal_perturbation(model, eps, seed=cfg.seed)
    return u


def parse_probes(cfg):
    """``kind@x[:y[:z]][/component]`` items separated by commas."""
    probes = []
    for item in cfg.getlist("qoi", "probes"):
        kind, _, where = item.partition("@")
        kind = kind.strip()
        location, component = None, 0
        if where:
            where, _, comp = where.partition("/")
            coords = [float(c) for c in where.split(":")]
            location = coords[0] if len(coords) == 1 else tuple(coords)
            component = int(comp) if comp else 0
        probes.append(QoIProbe(kind, location, component, name=item.replace("@", "_at_").replace(":", "_").replace("/", "_c")))
    if not probes:
        raise ConfigurationError("at least one QoI probe is required")
    return probes


def _strategy(name, recompute):
    name = name.strip().lower()
    if name == "galerkin":
        return LeftBasisStrategy.galerkin()
    if name in ("lspg", "l1_irls"):
        return LeftBasisStrategy(name, recompute)
    raise ConfigurationError(f"strategy {name!r} is not available from configuration")


class Pipeline:
    """Runs configured stages and collects a :class:`RunReport`."""

    def __init__(self, cfg, out_dir=None):
        self.cfg = cfg
        self.out = Path(out_dir) if out_dir is not None else None
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
        self.model = build_model(cfg)
        self.u_init = initial_state(self.model, cfg)
        self.probes = parse_probes(cfg)
        for p in self.probes:
            p.bind(self.model)
        self.dt = cfg.getfloat("time", "dt")
        self.t0 = cfg.getfloat("time", "t_start")
        self.t_end = cfg.getfloat("time", "t_end")
        self.n_steps = int(round((self.t_end - self.t0) / self.dt))
        self.record_every = _steps_per_sample(cfg.getfloat("report", "delta_s"), self.dt)
        self.scheme = cfg.get("time", "scheme")
        self.rom_scheme = cfg.get("rom", "scheme") or self.scheme
        self.artifacts = {}
        self.report = RunReport(config=cfg.as_dict(), provenance=self._provenance())

    def _provenance(self):
        h = hashlib.sha256(json.dumps(self.cfg.as_dict(), sort_keys=True).encode())
        h.update(str(self.cfg.seed).encode())
        return h.hexdigest()[:16]

    # -- artifact access ----------------------------------------------------
    def _need(self, name, stage):
        if name in self.artifacts:
            return self.artifacts[name]
        loader = getattr(self, f"_load_{name}")
        value = loader() if self.out is not None else None
        if value is None:
            raise PipelineError(f"stage '{stage}' needs '{name}', which no earlier stage produced")
        self.artifacts[name] = value
        return value

    def _load_hdm(self):
        path = self.out / "hdm.bin"
        return read_snapshots(path) if path.exists() else None

    def _load_snapshots(self):
        path = self.out / "snapshots.bin"
        return read_snapshots(path) if path.exists() else None

    def _load_bases(self):
        bases = []
        i = 0
        while (self.out / f"basis_{i}.bin").exists():
            cols = read_snapshots(self.out / f"basis_{i}.bin")
            meta = json.loads((self.out / f"basis_{i}.json").read_text())
            basis = ReducedBasis(cols.states[:, 0], cols.states[:, 1:], np.array(meta["singular_values"]), meta["criterion"])
            bases.append(basis)
            i += 1
        return bases or None

    def _load_samples(self):
        samples = {}
        for path in sorted(self.out.glob("ecsw_*.json")):
            _, i, strat = path.stem.split("_", 2)
            samples[(int(i), strat)] = EcswSampleSet.load(path)
        return samples or None

    def _load_runs(self):
        path = self.out / "runs.json"
        return json.loads(path.read_text()) if path.exists() else None

    # -- stages --------------------------------------------------------------
    def run(self, stages=None):
        stages = list(stages or self.cfg.stages)
        for stage in stages:
            if stage not in STAGES:
                raise PipelineError(f"unknown stage {stage!r}")
        for stage in STAGES:
            if stage in stages:
                for need in REQUIRES[stage]:
                    self._need(need, stage)
                getattr(self, f"stage_{stage}")()
        return self.report

    def _record(self, run, times, states, reconstruct, traj):
        hist = {}
        full = reconstruct(states)
        for p in self.probes:
            hist[p.name] = evaluate_qoi(p, self.model, full).tolist()
        self.report.histories[run] = hist
        self.report.timings[run] = traj.wall_time
        self.report.classification[run] = (
            "completed" if traj.diverged_at is None else {"diverged_at": float(traj.diverged_at)}
        )
        if not self.report.times or len(times) > len(self.report.times):
            self.report.times = [float(t) for t in times]

    def stage_hdm(self):
        system = FullOrderSystem(self.model, config=self._hdm_newton())
        window = (self.cfg.getfloat("snapshots", "t_start"), self.cfg.getfloat("snapshots", "t_end"))
        k_snap = _steps_per_sample(self.cfg.getfloat("snapshots", "delta_s"), self.dt)
        stride = math.gcd(k_snap, self.record_every)
        traj = integrate(system, self.u_init, self.t0, self.dt, self.n_steps, self.scheme, stride)
        if not traj.completed:
            raise PipelineError(f"the high-dimensional model failed at t={traj.diverged_at}: {traj.failure}")
        snaps = collect_snapshots(traj, self.cfg.getfloat("snapshots", "delta_s"), window)
        idx = np.arange(0, traj.times.size, self.record_every // stride)
        recorded = SnapshotSet(traj.times[idx], traj.states[:, idx])
        self.artifacts["snapshots"] = snaps
        self.artifacts["hdm"] = recorded
        self._record("hdm", recorded.times, recorded.states, lambda s: s, traj)
        if self.out is not None:
            write_snapshots(self.out / "snapshots.bin", snaps)
            write_snapshots(self.out / "hdm.bin", recorded)

    def _hdm_newton(self):
        if isinstance(self.model, SpectralNSModel):
            return NewtonConfig(atol=1e-10, rtol=1e-10, max_iter=50, linear_solver="approximate", xtol=1e-13)
        return NewtonConfig(xtol=1e-13)

    def _offset(self):
        mode = self.cfg.get("pod", "offset").lower()
        if mode == "auto":
            mode = "zero" if isinstance(self.model, SpectralNSModel) else "initial"
        if mode == "initial":
            return self.u_init
        if mode == "zero":
            return np.zeros(self.model.dim)
        raise ConfigurationError(f"unknown POD offset {mode!r}")

    def stage_pod(self):
        snaps = self.artifacts["snapshots"]
        u0 = self._offset()
        blocks = self.model.state_blocks
        bases = []
        for i, crit in enumerate(self.cfg.criteria):
            basis = build_pod(snaps, u0, crit, self.cfg.getbool("pod", "normalize"), blocks)
            bases.append(basis)
            self.report.info[f"basis_{i}"] = {"criterion": crit, "n": basis.n}
            if self.out is not None:
                cols = SnapshotSet(np.arange(basis.n + 1, dtype=float), np.column_stack([basis.u0, basis.V]))
                write_snapshots(self.out / f"basis_{i}.bin", cols)
                meta = {"criterion": crit, "n": basis.n, "singular_values": basis.singular_values.tolist(), "hash": basis.provenance_hash()}
                (self.out / f"basis_{i}.json").write_text(json.dumps(meta))
        self.artifacts["bases"] = bases

    def _reduced_system(self, basis, strategy):
        mode = self.cfg.get("rom", "precompute").lower()
        if mode != "never" and hasattr(self.model, "quadratic_parts") and strategy.variant in ("galerkin", "lspg"):
            try:
                ops = precompute_quadratic(self.model, basis, lspg=not strategy.is_galerkin)
                return PrecomputedSystem(ops, basis, strategy), "precomputed"
            except InapplicableError:
                if mode == "always":
                    raise
        return ReducedSystem(FullEvaluator(self.model, basis), strategy), "direct"

    def _run_reduced(self, name, system, basis, info):
        y0 = basis.project(self.u_init)
        traj = integrate(system, y0, self.t0, self.dt, self.n_steps, self.rom_scheme, self.record_every)
        self._record(name, traj.times, traj.states, basis.reconstruct, traj)
        self.report.info[name] = dict(info, n=basis.n, newton_iterations=system.newton_iterations)
        self._save_runs()

    def _save_runs(self):
        if self.out is None:
            return
        # keep runs written by earlier invocations (stages run one at a time)
        data = self._load_runs() or {}
        data.update({
            run: {
                "histories": self.report.histories[run],
                "timing": self.report.timings[run],
                "classification": self.report.classification[run],
                "info": self.report.info.get(run, {}),
            }
            for run in self.report.histories
            if run != "hdm"
        })
        data["_times"] = self.report.times
        (self.out / "runs.json").write_text(json.dumps(data))

    def stage_rom(self):
        recompute = self.cfg.get("rom", "recompute")
        for i, basis in enumerate(self.artifacts["bases"]):
            for sname in self.cfg.getlist("rom", "strategies"):
                strategy = _strategy(sname, recompute)
                system, route = self._reduced_system(basis, strategy)
                self._run_reduced(f"prom_{strategy.variant}_{i}", system, basis, {"route": route, "tier": i})

    def stage_ecsw(self):
        eps = self.cfg.getfloat("ecsw", "epsilon")
        stride = self.cfg.getint("ecsw", "stride")
        train = self.artifacts["snapshots"].subsample(stride)
        recompute = self.cfg.get("rom", "recompute")
        samples = {}
        for i, basis in enumerate(self.artifacts["bases"]):
            for sname in self.cfg.getlist("ecsw", "strategies"):
                strategy = _strategy(sname, recompute)
                start = time.perf_counter()
                sample = train_ecsw(self.model, basis, strategy, train, eps)
                samples[(i, strategy.variant)] = sample
                self.report.info[f"ecsw_{i}_{strategy.variant}"] = {
                    "cells": len(sample),
                    "fraction": len(sample) / self.model.cell_count,
                    "residual": sample.residual,
                    "training_snapshots": len(train),
                    "seconds": time.perf_counter() - start,
                }
                if self.out is not None:
                    sample.save(self.out / f"ecsw_{i}_{strategy.variant}.json")
        self.artifacts["samples"] = samples

    def stage_hprom(self):
        recompute = self.cfg.get("rom", "recompute")
        bases = self.artifacts["bases"]
        for (i, variant), sample in sorted(self.artifacts["samples"].items()):
            strategy = _strategy(variant, recompute)
            system = HyperreducedSystem(self.model, bases[i], sample, strategy)
            self._run_reduced(f"hprom_{variant}_{i}", system, bases[i], {"cells": len(sample), "tier": i})

    def stage_compare(self):
        hdm = self.artifacts["hdm"]
        if "hdm" not in self.report.histories:
            for p in self.probes:
                self.report.histories.setdefault("hdm", {})[p.name] = evaluate_qoi(p, self.model, hdm.states).tolist()
        if self.out is not None:
            stored = self._load_runs() or {}
            for run, data in stored.items():
                if run.startswith("_") or run in self.report.histories:
                    continue
                self.report.histories[run] = data["histories"]
                self.report.timings[run] = data["timing"]
                self.report.classification[run] = data["classification"]
                self.report.info[run] = data["info"]
        runs = {k: v for k, v in self.report.histories.items() if k != "hdm"}
        if not runs:
            raise PipelineError("stage 'compare' needs at least one reduced-model run")
        self.report.times = [float(t) for t in hdm.times]
        ref = self.report.histories["hdm"]
        for run, hist in runs.items():
            self.report.errors[run] = {}
            for qoi, values in hist.items():
                if self.report.classification[run] != "completed":
                    self.report.errors[run][qoi] = None
                    continue
                self.report.errors[run][qoi] = relative_error(ref[qoi], values)
        if self.out is not None:
            self.write_outputs()

    def write_outputs(self):
        times = self.report.times
        for run, hist in self.report.histories.items():
            for qoi, values in hist.items():
                lines = ["t,value"] + [f"{times[j]!r},{float(v)!r}" for j, v in enumerate(values)]
                (self.out / f"{run}__{qoi}.csv").write_text("\n".join(lines) + "\n")
        (self.out / "report.json").write_text(json.dumps(self.report.to_json(), indent=1, sort_keys=True))


def run_experiment(config=None, out_dir=None, stages=None, seed=0):
    """Run the configured pipeline; ``config`` is an ExperimentConfig, a path or INI text."""
    cfg = config if hasattr(config, "parser") else load_config(config, seed=seed)
    pipe = Pipeline(cfg, out_dir)
    report = pipe.run(stages)
    if out_dir is not None and "compare" not in (stages or cfg.stages):
        pipe.write_outputs()
    return report
