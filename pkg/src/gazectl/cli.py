"""Command-line entry point.

    gazectl run <scenario> --out <dir> [--dt s] [--duration s]
    gazectl validate <model-or-scenario file>

``<scenario>`` is a scenario file or the name of a bundled scenario. All
diagnostics go to stderr; run results go to ``<dir>/<name>.csv`` and
``<dir>/<name>_summary.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from .kinematics import ModelError, model_from_dict
from .orientation import DegenerateFixation
from .simulator import (ScenarioError, bundled_scenario_path, bundled_scenarios,
                        load_scenario, run, scenario_from_dict)


@dataclass
class RunSummary:
    name: str
    steps: int
    max_angular_error: dict
    mean_angular_error: dict
    max_cartesian_error: dict
    mean_cartesian_error: dict
    limit_episodes: int
    wall_clock_ms: float


def limit_episodes(h):
    """Number of times any joint's activation rises from zero."""
    active = np.vstack([np.zeros((1, h.shape[1]), dtype=bool), h > 0.0])
    return int(np.sum(active[1:] & ~active[:-1]))


def summarize(log, wall_clock_ms):
    def stat(series, fn):
        return {e: float(fn(series[e])) for e in log.effectors}
    return RunSummary(
        name=log.name,
        steps=len(log),
        max_angular_error=stat(log.angular, np.max),
        mean_angular_error=stat(log.angular, np.mean),
        max_cartesian_error=stat(log.cartesian, np.max),
        mean_cartesian_error=stat(log.cartesian, np.mean),
        limit_episodes=limit_episodes(log.h),
        wall_clock_ms=wall_clock_ms,
    )


def _err(msg):
    print(msg, file=sys.stderr)


def resolve_scenario(ref):
    path = Path(ref)
    if path.exists():
        return path
    if ref in bundled_scenarios():
        return bundled_scenario_path(ref)
    raise FileNotFoundError(f"scenario not found: {ref} (bundled: "
                            f"{', '.join(bundled_scenarios())})")


def cmd_run(args):
    overrides = {"dt": args.dt, "duration": args.duration, "task_gain": args.task_gain,
                 "joint_gain": args.joint_gain, "sigma_min": args.sigma_min}
    try:
        scenario = load_scenario(resolve_scenario(args.scenario), overrides)
    except FileNotFoundError as exc:
        _err(f"error: {exc}")
        return 2
    except yaml.YAMLError as exc:
        _err(f"error: cannot parse scenario: {exc}")
        return 2
    except ScenarioError as exc:
        for p in exc.problems:
            _err(f"error: {p}")
        return 1

    t0 = time.perf_counter()
    try:
        log = run(scenario)
    except DegenerateFixation as exc:
        _err(f"error: degenerate geometry during run: {exc}")
        return 1
    elapsed = (time.perf_counter() - t0) * 1000.0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.write_csv(out / f"{scenario.name}.csv")
    summary = summarize(log, elapsed)
    with open(out / f"{scenario.name}_summary.json", "w") as fh:
        json.dump(asdict(summary), fh, indent=2)
    _err(f"{scenario.name}: {summary.steps} steps in {elapsed:.0f} ms, "
         f"{summary.limit_episodes} limit episodes")
    for e in log.effectors:
        _err(f"  {e}: max cartesian error {summary.max_cartesian_error[e]:.3g} m, "
             f"max angular error {summary.max_angular_error[e]:.3g} rad")
    return 0


def cmd_validate(args):
    path = Path(args.path)
    try:
        with path.open() as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        _err(f"error: file not found: {path}")
        return 2
    except yaml.YAMLError as exc:
        _err(f"error: cannot parse {path}: {exc}")
        return 2

    try:
        if isinstance(data, dict) and "joints" in data:
            model = model_from_dict(data)
            _err(f"{path}: model {model.name!r}, {model.n} joints, "
                 f"{len(model.effectors)} effectors")
        else:
            scenario = scenario_from_dict(data, base_dir=path.parent)
            _err(f"{path}: scenario {scenario.name!r}, {len(scenario.tasks)} tasks, "
                 f"{scenario.steps} steps")
    except (ModelError, ScenarioError) as exc:
        for p in exc.problems:
            _err(f"error: {p}")
        return 1
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; runs are deterministic")
    parser = argparse.ArgumentParser(prog="gazectl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common],
                       help="simulate a scenario and write its log")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dt", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--task-gain", type=float)
    p.add_argument("--joint-gain", type=float)
    p.add_argument("--sigma-min", type=float, help="relative SVD truncation threshold")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", parents=[common], help="check a model or scenario file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
