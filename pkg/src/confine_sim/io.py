"""Trajectory and table files.

A trajectory file is JSON Lines: one header object (schema tag, version,
config echo, run status, diagnostics) followed by one object per snapshot.
Floats are written with ``repr`` precision, so reading a file back gives
bit-identical arrays.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .engine import Diagnostics, Snapshot, Trajectory
from .params import from_mapping

SCHEMA = "confine-sim-trajectory"
SCHEMA_VERSION = 1


class TrajectoryFormatError(ValueError):
    pass


def _snapshot_record(s: Snapshot) -> dict:
    return {
        "step": s.step,
        "t": s.t,
        "dt": s.dt,
        "tip_x": s.tip_x,
        "cortex_centroid": s.cortex_centroid.tolist(),
        "cortex_area": s.cortex_area,
        "nucleus_area": s.nucleus_area,
        "centrosome": s.centrosome.tolist(),
        "omega": s.omega,
        "cortex": s.cortex.tolist(),
        "nucleus": s.nucleus.tolist(),
    }


def _snapshot_from(rec: dict) -> Snapshot:
    return Snapshot(
        step=int(rec["step"]),
        t=float(rec["t"]),
        dt=float(rec["dt"]),
        cortex=np.array(rec["cortex"], dtype=float),
        nucleus=np.array(rec["nucleus"], dtype=float),
        centrosome=np.array(rec["centrosome"], dtype=float),
        omega=float(rec["omega"]),
        tip_x=float(rec["tip_x"]),
        cortex_centroid=np.array(rec["cortex_centroid"], dtype=float),
        cortex_area=float(rec["cortex_area"]),
        nucleus_area=float(rec["nucleus_area"]),
    )


def write_trajectory(traj: Trajectory, path: str | Path) -> Path:
    path = Path(path)
    header = {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "config": traj.params.to_dict(),
        "status": traj.status,
        "message": traj.message,
        "diagnostics": dataclasses.asdict(traj.diagnostics),
        "snapshots": len(traj.snapshots),
    }
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in traj.snapshots:
            fh.write(json.dumps(_snapshot_record(s)) + "\n")
        if traj.final is not None and traj.final is not traj.snapshots[-1]:
            fh.write(json.dumps({"final": _snapshot_record(traj.final)}) + "\n")
    return path


def read_trajectory(path: str | Path) -> Trajectory:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise TrajectoryFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"{path}: bad header: {exc}") from None
    if header.get("schema") != SCHEMA:
        raise TrajectoryFormatError(f"{path}: not a trajectory file")
    if header.get("version") != SCHEMA_VERSION:
        raise TrajectoryFormatError(f"{path}: unsupported version {header.get('version')}")
    traj = Trajectory(params=from_mapping(header["config"]))
    traj.status = header["status"]
    traj.message = header.get("message", "")
    traj.diagnostics = Diagnostics(**header.get("diagnostics", {}))
    for line in lines[1:]:
        rec = json.loads(line)
        if "final" in rec:
            traj.final = _snapshot_from(rec["final"])
        else:
            traj.snapshots.append(_snapshot_from(rec))
    if len(traj.snapshots) != header.get("snapshots", len(traj.snapshots)):
        raise TrajectoryFormatError(f"{path}: truncated file")
    if traj.final is None and traj.snapshots:
        traj.final = traj.snapshots[-1]
    return traj


SUMMARY_COLUMNS = (
    "step", "t", "dt", "tip_x", "centroid_x", "centroid_y", "cortex_area", "nucleus_area",
    "centrosome_x", "centrosome_y", "omega",
)


def write_summary_csv(traj: Trajectory, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for s in traj.snapshots:
            w.writerow(
                [s.step] + [repr(float(v)) for v in (
                    s.t, s.dt, s.tip_x, s.cortex_centroid[0], s.cortex_centroid[1], s.cortex_area,
                    s.nucleus_area, s.centrosome[0], s.centrosome[1], s.omega,
                )]
            )
    return path


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_table(records: list[dict], columns: list[str], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for rec in records:
            w.writerow([_cell(rec.get(c, "")) for c in columns])
    return path


def read_table(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
