"""Command-line front end.

Exit codes: 0 success, 1 run failure (e.g. integrator blowup), 2 bad
configuration or usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .errors import BlowupError, ScenarioError
from .runner import run, sweep
from .scenario import Scenario, dump_scenario, list_scenarios, load_scenario

EXIT_OK, EXIT_RUN, EXIT_CONFIG = 0, 1, 2


def _load(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    if getattr(args, "seed_override", None) is not None:
        scenario = scenario.with_seeds(args.seed_override, args.seed_override)
    return scenario


def _parse_values(text: str) -> list:
    if not text.strip():
        return []
    return [yaml.safe_load(tok) for tok in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hamobs", description="Observer-based dipole identification experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and gain-regime warnings")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario (file or built-in name)")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, type=Path, help="output directory")
    r.add_argument("--seed-override", type=int, help="use this seed for both noise streams")
    r.add_argument("--stride", type=int, help="record every k-th step")

    s = sub.add_parser("sweep", help="sweep one scenario parameter")
    s.add_argument("scenario")
    s.add_argument("--param", required=True, help="dotted path, e.g. measurement.noise_sigma")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--replicates", type=int, default=1, help="seeds per value")
    s.add_argument("--parallel", type=int, default=1, help="worker processes")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--seed-override", type=int, help="base seed for both noise streams")

    sub.add_parser("list", help="list built-in scenarios")

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")

    ps = sub.add_parser("print-scenario", help="print a scenario as YAML")
    ps.add_argument("scenario")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        if args.command == "list":
            for name, desc in list_scenarios():
                print(f"{name}: {desc}")
        elif args.command == "validate":
            scenario = _load(args)
            print(f"ok: {scenario.name}")
        elif args.command == "print-scenario":
            sys.stdout.write(dump_scenario(_load(args)))
        elif args.command == "run":
            summary = run(_load(args), args.out, stride=args.stride)
            conv = summary["convergence"]
            print(f"{summary['scenario']}: max final |theta_hat - theta| = {conv['max_final_error']:.3g}, "
                  f"runtime {summary['runtime_seconds']:.1f}s -> {args.out}")
        elif args.command == "sweep":
            rows = sweep(_load(args), args.param, _parse_values(args.values), args.replicates, args.parallel,
                         args.out)
            failed = sum(r["status"] != "ok" for r in rows)
            print(f"{len(rows)} rows ({failed} failed) -> {args.out / 'sweep.csv'}")
            if failed:
                return EXIT_RUN
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowupError, FloatingPointError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
