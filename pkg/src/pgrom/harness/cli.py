"""Command-line entry point.

Each subcommand runs part of the pipeline; artifacts are exchanged through
the output directory, so ``hdm-run`` followed by ``pod-build`` equals one
run with both stages.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import PgromError
from .config import load_config
from .pipeline import Pipeline

__all__ = ["main"]

COMMANDS = {
    "hdm-run": ["hdm"],
    "pod-build": ["pod"],
    "rom-run": ["rom"],
    "ecsw-train": ["ecsw"],
    "hprom-run": ["hprom"],
    "compare": ["compare"],
}


def _parser():
    parser = argparse.ArgumentParser(prog="pgrom", description="Projection-based reduced-order model experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["sweep"]:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--out", type=Path, default=Path("pgrom-out"), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="random seed")
        if name == "sweep":
            p.add_argument("--param", required=True, help="section.key to vary, e.g. model.nu")
            p.add_argument("--values", required=True, help="comma-separated values")
            p.add_argument("--stages", default=None, help="comma-separated stages (default: from config)")
    return parser


def _summary(report):
    return {
        "classification": report.classification,
        "errors": report.errors,
        "timings": report.timings,
    }


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, seed=args.seed)
        if args.command == "sweep":
            section, _, key = args.param.partition(".")
            stages = [s.strip() for s in args.stages.split(",")] if args.stages else None
            results = {}
            for value in [v.strip() for v in args.values.split(",") if v.strip()]:
                sub_cfg = cfg.with_overrides({section: {key: value}})
                out = args.out / f"{key}={value}"
                pipe = Pipeline(sub_cfg, out)
                report = pipe.run(stages)
                pipe.write_outputs()
                results[value] = _summary(report)
            (args.out / "sweep.json").write_text(json.dumps(results, indent=1, sort_keys=True))
            print(json.dumps(results, indent=1, sort_keys=True))
            return 0
        pipe = Pipeline(cfg, args.out)
        report = pipe.run(COMMANDS[args.command])
        pipe.write_outputs()
        print(json.dumps(_summary(report), indent=1, sort_keys=True))
        return 0
    except PgromError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
