"""
KdV Lab — Report Writers.

report.json (sorted keys, resolved config embedded), norms.csv with the
fixed columns t, l2, hs_<s>..., smoothing, boundaryMass, and optional
snapshots.npz with a snapshots.json sidecar.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src import __version__
from src.runner.config import ExperimentConfig
from src.runner.experiments import ExperimentOutcome
from src.solver.trajectory import Trajectory

logger = logging.getLogger("kdvlab.runner.reports")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def build_report(config: ExperimentConfig, outcome: ExperimentOutcome, status: int) -> dict:
    return {
        "version": __version__,
        "name": config.name,
        "kind": config.kind.value,
        "status": status,
        "failures": list(outcome.failures),
        "config": config.model_dump(mode="json"),
        "results": outcome.report,
    }


def write_json(data: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(data), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


def write_norms_csv(traj: Trajectory, path: Path) -> Path:
    rows = traj.rows()
    fieldnames = list(rows[0].keys())
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: f"{v:.17g}" for k, v in row.items()})
    return path


def write_snapshots(traj: Trajectory, directory: Path) -> tuple[Path, Path]:
    grid = traj.snapshots[0].grid
    values = np.stack([u.values for u in traj.snapshots])
    npz = directory / "snapshots.npz"
    np.savez_compressed(npz, times=np.asarray(traj.snapshot_times), values=values, x=grid.x)
    sidecar = write_json(
        {
            "grid": grid.info(),
            "times": list(traj.snapshot_times),
            "coefficients": traj.coeffs_name,
            "arrays": {"times": "(k,)", "values": "(k, n) complex", "x": "(n,)"},
        },
        directory / "snapshots.json",
    )
    return npz, sidecar


def write_outputs(
    config: ExperimentConfig,
    outcome: ExperimentOutcome,
    directory: Path,
    status: Optional[int] = None,
) -> dict[str, Path]:
    """Write every artifact of one experiment into directory."""
    status = outcome.exit_code if status is None else status
    written = {"report": write_json(build_report(config, outcome, status), directory / "report.json")}
    traj = outcome.trajectory
    if traj is not None and traj.norms:
        written["norms"] = write_norms_csv(traj, directory / "norms.csv")
        if config.output.snapshots:
            written["snapshots"], written["sidecar"] = write_snapshots(traj, directory)
    if outcome.variable_change is not None:
        written["variable_change"] = outcome.variable_change.to_csv(directory / "variable_change.csv")
    logger.info("Wrote %s to %s", ", ".join(sorted(written)), directory)
    return written


def write_error(config_path: Path, error: dict, directory: Path, status: int) -> Path:
    """report.json for a run that failed before producing results."""
    return write_json(
        {"version": __version__, "source": str(config_path), "status": status, "error": error},
        directory / "report.json",
    )
