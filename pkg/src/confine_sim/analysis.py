"""Migration metrics and the parameter-sweep harness."""

from __future__ import annotations

import itertools
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import ConfigurationError, ModelParams, resolve_key

THREADS_ENV = "CONFINE_SIM_THREADS"


@dataclass(frozen=True)
class SpeedResult:
    speed: float
    moved: bool
    period_found: bool
    t_start: float = float("nan")
    t_stop: float = float("nan")


def _crossing_time(t: np.ndarray, v: np.ndarray, level: float, start: int = 0):
    """First time at or after index ``start`` where ``v`` reaches ``level``.

    Linear interpolation between samples; returns ``(time, index)`` or ``None``.
    """
    hits = np.flatnonzero(v[start:] >= level)
    if hits.size == 0:
        return None
    k = start + int(hits[0])
    if k == 0 or v[k] == level or k == start:
        return float(t[k]), k
    t0, t1, v0, v1 = t[k - 1], t[k], v[k - 1], v[k]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0)), k


def tip_period(t, tip, wavelength: float) -> SpeedResult:
    """Detect one period as a full wavelength of tip advance after a half-wavelength burn-in."""
    t = np.asarray(t, dtype=float)
    tip = np.asarray(tip, dtype=float)
    if len(t) < 2:
        return SpeedResult(0.0, False, False)
    base = tip[0]
    first = _crossing_time(t, tip, base + 0.5 * wavelength)
    if first is None:
        return SpeedResult(0.0, False, False)
    t_a, k_a = first
    second = _crossing_time(t, tip, base + 1.5 * wavelength, max(k_a - 1, 0))
    if second is None:
        return SpeedResult(0.0, False, False, t_start=t_a)
    t_b, _ = second
    if not t_b > t_a:
        return SpeedResult(0.0, False, False, t_start=t_a)
    return SpeedResult(wavelength / (t_b - t_a), True, True, t_a, t_b)


def mean_speed(traj, wavelength: float | None = None) -> SpeedResult:
    if wavelength is None:
        wavelength = traj.params.channel.spec().wavelength
    return tip_period(traj.times(), traj.tip(), wavelength)


def time_average(t, values, t_a: float | None = None, t_b: float | None = None) -> float:
    """Trapezoidal mean of ``values`` over ``[t_a, t_b]`` (the whole record by default)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) == 1:
        return float(v[0])
    lo = t[0] if t_a is None else t_a
    hi = t[-1] if t_b is None else t_b
    inner = (t > lo) & (t < hi)
    ts = np.concatenate(([lo], t[inner], [hi]))
    vs = np.concatenate(([np.interp(lo, t, v)], v[inner], [np.interp(hi, t, v)]))
    if hi <= lo:
        return float(vs[0])
    return float(np.trapezoid(vs, ts) / (hi - lo))


def mean_area_ratio(traj, target: float | None = None, period: SpeedResult | None = None) -> float:
    """Mean nucleus area over the detected period (whole run if none) relative to its target."""
    if target is None:
        target = traj.params.nucleus.A_n
    period = mean_speed(traj) if period is None else period
    t = traj.times()
    a = np.array([s.nucleus_area for s in traj.snapshots])
    if period.period_found:
        return time_average(t, a, period.t_start, period.t_stop) / target
    return time_average(t, a) / target


@dataclass(frozen=True)
class MetricsRow:
    values: dict
    mean_speed: float
    mean_area_ratio: float
    moved: bool
    period_found: bool
    tip_advance: float
    centroid_shift: float
    t_final: float
    steps: int
    status: str
    cause: str = ""
    wall_time: float = 0.0

    COLUMNS = (
        "mean_speed",
        "mean_area_ratio",
        "moved",
        "period_found",
        "tip_advance",
        "centroid_shift",
        "t_final",
        "steps",
        "status",
        "cause",
        "wall_time",
    )

    def as_record(self) -> dict:
        rec = dict(self.values)
        for c in self.COLUMNS:
            rec[c] = getattr(self, c)
        return rec


def metrics_from_trajectory(traj, values: dict | None = None, wall_time: float = 0.0) -> MetricsRow:
    period = mean_speed(traj)
    first, last = traj.snapshots[0], traj.snapshots[-1]
    return MetricsRow(
        values=dict(values or {}),
        mean_speed=period.speed,
        mean_area_ratio=mean_area_ratio(traj, period=period),
        moved=period.moved,
        period_found=period.period_found,
        tip_advance=last.tip_x - first.tip_x,
        centroid_shift=float(last.cortex_centroid[0] - first.cortex_centroid[0]),
        t_final=last.t,
        steps=last.step,
        status=traj.status,
        cause=traj.message,
        wall_time=wall_time,
    )


# -- sweeps ------------------------------------------------------------------

_GRID_RE = re.compile(r"^\s*(logspace|linspace)\s*\(([^)]*)\)\s*$")


def parse_grid(text: str) -> list[float]:
    """``logspace(a,b,n)``, ``linspace(a,b,n)`` or a comma separated list."""
    m = _GRID_RE.match(text)
    try:
        if m:
            parts = [p.strip() for p in m.group(2).split(",")]
            if len(parts) != 3:
                raise ConfigurationError(f"{m.group(1)} needs three arguments: {text!r}")
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ConfigurationError(f"grid size must be positive: {text!r}")
            fn = np.logspace if m.group(1) == "logspace" else np.linspace
            return [float(v) for v in fn(a, b, n)]
        vals = [float(p) for p in text.strip().strip("[]").split(",") if p.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse grid {text!r}") from None
    if not vals:
        raise ConfigurationError(f"empty grid {text!r}")
    return vals


def parse_axis(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise ConfigurationError(f"axis must look like NAME=GRID, got {text!r}")
    name, grid = text.split("=", 1)
    group, key = resolve_key(name.strip())
    return f"{group}.{key}", parse_grid(grid)


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    jobs: int = 1
    t_end: float | None = None
    snapshot_stride: int | None = None

    def __post_init__(self):
        norm = []
        for name, grid in self.axes:
            if len(grid) == 0:
                raise ConfigurationError(f"axis {name} has an empty grid")
            group, key = resolve_key(name)
            norm.append((f"{group}.{key}", tuple(float(v) for v in grid)))
        object.__setattr__(self, "axes", tuple(norm))
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")

    def points(self) -> list[dict]:
        names = [a for a, _ in self.axes]
        grids = [g for _, g in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*grids)]

    def configs(self) -> list[ModelParams]:
        """Grid points as configs; raises on any invalid combination."""
        out = []
        for point in self.points():
            p = self.base
            for name, value in point.items():
                p = p.with_value(name, value)
            out.append(p)
        return out


def effective_jobs(requested: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigurationError(f"{THREADS_ENV} must be at least 1")
        return n
    return requested


@dataclass(frozen=True)
class _Task:
    index: int
    values: dict
    params: ModelParams | None
    error: str
    t_end: float | None
    snapshot_stride: int | None


def _execute(task: _Task) -> tuple[int, MetricsRow]:
    from .engine import run

    empty = dict(
        mean_speed=0.0, mean_area_ratio=float("nan"), moved=False, period_found=False,
        tip_advance=float("nan"), centroid_shift=float("nan"), t_final=0.0, steps=0,
    )
    if task.params is None:
        return task.index, MetricsRow(values=task.values, status="invalid", cause=task.error, **empty)
    start = time.perf_counter()
    try:
        traj = run(task.params, t_end=task.t_end, snapshot_stride=task.snapshot_stride)
    except Exception as exc:  # recorded, never dropped
        return task.index, MetricsRow(
            values=task.values, status="error", cause=f"{type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - start, **empty,
        )
    return task.index, metrics_from_trajectory(traj, task.values, time.perf_counter() - start)


def run_sweep(spec: SweepSpec, progress=None) -> list[MetricsRow]:
    """Run every grid point; rows come back in grid order whatever the parallelism."""
    tasks = []
    for i, point in enumerate(spec.points()):
        p, err = spec.base, ""
        try:
            for name, value in point.items():
                p = p.with_value(name, value)
        except ConfigurationError as exc:
            p, err = None, str(exc)
        tasks.append(_Task(i, point, p, err, spec.t_end, spec.snapshot_stride))
    jobs = min(effective_jobs(spec.jobs), max(len(tasks), 1))
    rows: list[MetricsRow | None] = [None] * len(tasks)
    if jobs == 1:
        results = map(_execute, tasks)
        for idx, row in results:
            rows[idx] = row
            if progress:
                progress(idx, row)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, row in pool.map(_execute, tasks):
                rows[idx] = row
                if progress:
                    progress(idx, row)
    return rows  # type: ignore[return-value]


def sweep_columns(spec: SweepSpec) -> list[str]:
    return [a for a, _ in spec.axes] + list(MetricsRow.COLUMNS)
