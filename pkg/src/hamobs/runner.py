"""Run scenarios to disk and sweep one parameter across seeds."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .diagnostics import (
    check_identifiability,
    convergence_metrics,
    eigenbasis_dipole,
    rabi_analysis,
)
from .errors import BlowupError, ScenarioError
from .estimator import resonant_drive
from .integrate import Trajectory, integrate
from .scenario import Scenario, scenario_from_dict, scenario_to_dict, set_path
from .system import theta_from_dipole

log = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.yaml"
MANIFEST_FILE = "manifest.json"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    """One header row, ``%.17g`` values, LF line endings."""
    path = Path(path)
    with path.open("w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(traj.columns) + "\n")
        for row in traj.table():
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _plain(x):
    """Convert numpy scalars/arrays and dataclass-ish values for YAML output."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def scenario_reports(scenario: Scenario) -> dict:
    """Identifiability and Rabi reports of the true system under the nominal field."""
    system = scenario.system
    ident = check_identifiability(system.omega, system.dipole.real)
    out = {"identifiability": {
        "a2_ok": ident.a2_ok, "a3_ok": ident.a3_ok, "a1_connected": ident.a1_connected,
        "min_transition_gap": ident.min_transition_gap,
    }}
    if system.is_diagonal:
        theta_eff = system.theta
    else:
        mu_e = eigenbasis_dipole(system.hamiltonian, system.dipole)
        out["identifiability"]["a3_ok_eigenbasis"] = bool(np.max(np.abs(np.diag(mu_e))) <= 1e-9)
        theta_eff = theta_from_dipole(mu_e.real)
    amps, _, _ = resonant_drive(system, scenario.control.nominal(), require_diagonal=False)
    est = scenario.estimator
    rabi = rabi_analysis(amps, theta_eff, est.Gamma, est.gamma)
    out["rabi"] = {"Omega": rabi.Omega, "min_gap": rabi.min_gap, "max_gap": rabi.max_gap,
                   "degenerate": rabi.degenerate, "gain_margin": rabi.gain_margin}
    return out


def final_quarter_mean(traj: Trajectory) -> np.ndarray:
    t = traj.times
    sel = t >= t[0] + 0.75 * (t[-1] - t[0])
    return traj.theta_hat[sel].mean(axis=0)


def summarize(scenario: Scenario, traj: Trajectory, runtime: float) -> dict:
    truth = scenario.system.theta
    metrics = convergence_metrics(traj.times, traj.theta_hat, truth)
    summary = {
        "scenario": scenario.name,
        "status": "partial" if traj.partial else "ok",
        "step": traj.step,
        "rows": len(traj),
        "theta": truth,
        "theta_hat_final": traj.theta_hat[-1],
        "theta_hat_final_quarter_mean": final_quarter_mean(traj),
        "convergence": metrics.as_dict(),
        "V_initial": float(traj.V[0]),
        "V_final": float(traj.V[-1]),
        "max_abs_e_final_quarter": float(np.max(np.abs(traj.e[traj.times >= 0.75 * traj.times[-1]]))),
        "conservation": traj.conservation,
        "runtime_seconds": runtime,
    }
    summary.update(scenario_reports(scenario))
    summary["config"] = scenario_to_dict(scenario)
    return _plain(summary)


def _write_outputs(scenario: Scenario, traj: Trajectory, runtime: float, out_dir: Path, partial: bool,
                   error: str | None = None) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_trajectory_csv(traj, out_dir / TRAJECTORY_FILE)
    summary = summarize(scenario, traj, runtime)
    if error:
        summary["error"] = error
    sum_path = out_dir / SUMMARY_FILE
    sum_path.write_text(yaml.safe_dump(summary, sort_keys=False), encoding="utf-8", newline="\n")
    manifest = {
        "scenario": scenario.name,
        "partial": partial,
        "files": {p.name: {"sha256": sha256(p), "bytes": p.stat().st_size} for p in (csv_path, sum_path)},
    }
    (out_dir / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8", newline="\n")
    return summary


def run(scenario: Scenario, out_dir, stride: int | None = None) -> dict:
    """Integrate ``scenario`` and write trajectory, summary and manifest.

    On a blowup the partial trajectory is still written, flagged in the
    manifest, and the error re-raised.
    """
    if stride is not None:
        scenario = replace(scenario, integration=replace(scenario.integration, record_stride=stride))
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    try:
        traj = integrate(scenario)
    except BlowupError as exc:
        partial = getattr(exc, "trajectory", None)
        if partial is not None and len(partial):
            _write_outputs(scenario, partial, time.perf_counter() - t0, out_dir, True, str(exc))
        raise
    return _write_outputs(scenario, traj, time.perf_counter() - t0, out_dir, False)


# --- sweeps ---------------------------------------------------------------------


def _sweep_row(task: dict) -> dict:
    row = {k: task[k] for k in ("index", "value", "replicate", "seed_measurement", "seed_control")}
    try:
        scenario = scenario_from_dict(task["config"])
        t0 = time.perf_counter()
        if task["out_dir"] is not None:
            summary = run(scenario, task["out_dir"])
            final = np.asarray(summary["theta_hat_final"])
            qmean = np.asarray(summary["theta_hat_final_quarter_mean"])
            ttt = summary["convergence"]["time_to_tolerance"]
        else:
            traj = integrate(scenario)
            final = traj.theta_hat[-1]
            qmean = final_quarter_mean(traj)
            ttt = convergence_metrics(traj.times, traj.theta_hat, scenario.system.theta).time_to_tolerance
        truth = scenario.system.theta
        row.update(status="ok", runtime_seconds=time.perf_counter() - t0,
                   max_final_error=float(np.max(np.abs(final - truth))),
                   max_quarter_mean_error=float(np.max(np.abs(qmean - truth))),
                   time_to_tolerance=ttt, error="")
        for lab, v in zip(_labels(truth.size), qmean):
            row[f"thetahat_mean_{lab}"] = float(v)
    except Exception as exc:  # noqa: BLE001 - failures are reported per row
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def _labels(npairs: int) -> list[str]:
    from .system import level_pairs, pair_label

    dim = int(round((1 + (1 + 8 * npairs) ** 0.5) / 2))
    return [pair_label(l, k) for l, k in level_pairs(dim)]


def sweep_tasks(base: Scenario, path: str, values, replicates: int = 1, out_dir=None) -> list[dict]:
    """One task per (value, replicate) with seeds ``base seed + replicate index``.

    Every swept value sees the same noise realizations, so differences
    between values are not masked by seed-to-seed scatter.
    """
    values = list(values)
    if not values:
        raise ScenarioError("empty-axis", path)
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    base_dict = scenario_to_dict(base)
    seeds = base_dict["seeds"]
    tasks = []
    for vi, value in enumerate(values):
        if isinstance(value, float) and not np.isfinite(value):
            raise ScenarioError("sweep values must be finite", path)
        d = set_path(base_dict, path, value)
        for r in range(replicates):
            i = vi * replicates + r
            sm, sc = seeds["measurement"] + r, seeds["control"] + r
            cfg = set_path(d, "seeds", {"measurement": sm, "control": sc})
            cfg["name"] = f"{base.name}-{i:03d}"
            tasks.append({
                "index": i, "value": value, "replicate": r, "seed_measurement": sm, "seed_control": sc,
                "config": cfg, "out_dir": None if out_dir is None else str(Path(out_dir) / f"row{i:03d}"),
            })
    # fail fast on configuration errors before spending time on runs
    scenario_from_dict(tasks[0]["config"])
    return tasks


def sweep(base: Scenario, path: str, values, replicates: int = 1, parallel: int = 1, out_dir=None) -> list[dict]:
    """Run ``base`` once per value and replicate; rows come back in index order.

    Failures are recorded per row and do not stop the sweep.  With
    ``out_dir`` each row writes its own run directory and ``sweep.csv`` is
    written alongside.
    """
    tasks = sweep_tasks(base, path, values, replicates, out_dir)
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    rows.sort(key=lambda r: r["index"])
    if out_dir is not None:
        write_sweep_table(rows, Path(out_dir) / "sweep.csv")
    return rows


def write_sweep_table(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})
    return path
