"""Sinusoidal channel, wall barrier and initial configurations.

The channel is ``|y| <= f(x) = f_width + f_beta sin(f_omega0 x)``, so
``f_width`` is half the mean width and the narrowest gap is
``2 (f_width - f_beta)``. Each wall acts through the barrier
``U(d) = min(xi d - 1, 0)^2 (-log(xi d))`` of the vertical distances
``f(x) + y`` and ``f(x) - y``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import ClosedCurve, as_nodes, polygon_area

log = logging.getLogger(__name__)


class WallPenetrationError(RuntimeError):
    """A point reached or crossed a channel wall."""


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    f_width: float = 0.4
    f_beta: float = 0.2
    f_omega0: float = 8.0
    xi: float = 20.0

    def __post_init__(self):
        if not self.xi > 0:
            raise ConfigurationError("channel.xi must be positive")
        if not self.f_omega0 > 0:
            raise ConfigurationError("channel.f_omega0 must be positive")
        if not 0 <= self.f_beta < self.f_width:
            raise ConfigurationError("channel requires 0 <= f_beta < f_width")

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.f_omega0

    @property
    def smallest_constriction(self) -> float:
        return 2.0 * (self.f_width - self.f_beta)


def wall_profile(spec: ChannelSpec, x):
    return spec.f_width + spec.f_beta * np.sin(spec.f_omega0 * np.asarray(x, dtype=float))


def _profile_derivs(spec: ChannelSpec, x):
    w = spec.f_omega0
    s = np.sin(w * x)
    f = spec.f_width + spec.f_beta * s
    fp = spec.f_beta * w * np.cos(w * x)
    fpp = -spec.f_beta * w * w * s
    return f, fp, fpp


# -- barrier ---------------------------------------------------------------


def barrier(xi: float, d, second: bool = False):
    """Barrier value and derivative (and optionally second derivative) at ``d``.

    Raises :class:`WallPenetrationError` for ``d <= 0``.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0.0)):
        raise WallPenetrationError("wall penetration: barrier evaluated at non-positive distance")
    u = np.minimum(xi * d, 1.0)
    active = u < 1.0
    lg = -np.log(u)
    um = u - 1.0
    val = np.where(active, um * um * lg, 0.0)
    der = np.where(active, xi * (2.0 * um * lg - um * um / u), 0.0)
    if not second:
        return val, der
    sec = np.where(active, xi * xi * (2.0 * lg - 4.0 * um / u + um * um / (u * u)), 0.0)
    return val, der, sec


def wall_potential(spec: ChannelSpec, points) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    f = wall_profile(spec, p[:, 0])
    up, _ = barrier(spec.xi, f - p[:, 1])
    lo, _ = barrier(spec.xi, f + p[:, 1])
    return up + lo


def wall_force(spec: ChannelSpec, points) -> np.ndarray:
    """``-grad`` of the summed barrier potential at each point."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    f, fp, _ = _profile_derivs(spec, p[:, 0])
    _, du = barrier(spec.xi, f - p[:, 1])
    _, dl = barrier(spec.xi, f + p[:, 1])
    gx = (du + dl) * fp
    gy = dl - du
    return -np.column_stack([gx, gy])


def wall_hessian(spec: ChannelSpec, points) -> np.ndarray:
    """Hessian of the summed barrier potential, shape ``(n, 2, 2)``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    f, fp, fpp = _profile_derivs(spec, p[:, 0])
    _, du, ddu = barrier(spec.xi, f - p[:, 1], second=True)
    _, dl, ddl = barrier(spec.xi, f + p[:, 1], second=True)
    h = np.empty((len(p), 2, 2))
    h[:, 0, 0] = (ddu + ddl) * fp * fp + (du + dl) * fpp
    h[:, 0, 1] = h[:, 1, 0] = (ddl - ddu) * fp
    h[:, 1, 1] = ddu + ddl
    return h


def inside_channel(spec: ChannelSpec, points) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return np.abs(p[:, 1]) < wall_profile(spec, p[:, 0])


# -- initial cortex ----------------------------------------------------------


def _inset_area(spec: ChannelSpec, x_min: float, x_max: float) -> float:
    """Area between y = +-(f(x) - 1/xi) for x in [x_min, x_max] (closed form)."""
    w = spec.f_omega0
    h = spec.f_width - 1.0 / spec.xi
    return 2.0 * (h * (x_max - x_min) - spec.f_beta / w * (np.cos(w * x_max) - np.cos(w * x_min)))


def cortex_right_end(spec: ChannelSpec, area: float, max_periods: float = 10.0) -> float:
    """Right end ``x_max`` of the initial cell for a target enclosed area."""
    if spec.f_width - spec.f_beta <= 1.0 / spec.xi:
        raise ConfigurationError("channel constriction is narrower than the barrier layer")
    x_min = -np.pi / (2.0 * spec.f_omega0)
    hi = x_min + max_periods * spec.wavelength
    if _inset_area(spec, x_min, hi) < area:
        raise ConfigurationError(f"target cell area {area} is not reachable within {max_periods} periods")
    return float(brentq(lambda x: _inset_area(spec, x_min, x) - area, x_min, hi, xtol=1e-12, rtol=1e-15))


def initial_cortex(spec: ChannelSpec, area: float, n: int, dense: int = 4000) -> ClosedCurve:
    """Evenly spaced closed curve following the inset walls with the given area.

    The four pieces (bottom wall, right side, top wall, left side) are sampled
    exactly, so every wall node keeps a vertical clearance of exactly ``1/xi``.
    """
    x_min = -np.pi / (2.0 * spec.f_omega0)
    x_max = cortex_right_end(spec, area)
    inset = 1.0 / spec.xi
    h = lambda x: wall_profile(spec, x) - inset

    def bottom(t):
        x = x_min + t * (x_max - x_min)
        return np.column_stack([x, -h(x)])

    def right(t):
        y = (2 * t - 1) * h(x_max)
        return np.column_stack([np.full_like(t, x_max), y])

    def top(t):
        x = x_max - t * (x_max - x_min)
        return np.column_stack([x, h(x)])

    def left(t):
        y = (1 - 2 * t) * h(x_min)
        return np.column_stack([np.full_like(t, x_min), y])

    pieces = (bottom, right, top, left)
    tt = np.linspace(0.0, 1.0, dense + 1)
    lengths = []
    cums = []
    for piece in pieces:
        pts = piece(tt)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        cums.append(cum)
        lengths.append(cum[-1])
    offsets = np.concatenate(([0.0], np.cumsum(lengths)))
    total = offsets[-1]
    targets = np.arange(n) * total / n
    nodes = np.empty((n, 2))
    for k, piece in enumerate(pieces):
        sel = (targets >= offsets[k]) & (targets < offsets[k + 1])
        if np.any(sel):
            t = np.interp(targets[sel] - offsets[k], cums[k], tt)
            nodes[sel] = piece(t)
    return ClosedCurve(nodes)


# -- initial nucleus ---------------------------------------------------------


def _distance_to_walls(spec: ChannelSpec, c: np.ndarray, span: float) -> float:
    x = np.linspace(c[0] - span, c[0] + span, 20001)
    f = wall_profile(spec, x)
    dy = np.minimum(np.abs(f - c[1]), np.abs(-f - c[1]))
    d2 = (x - c[0]) ** 2 + dy**2
    k = int(np.argmin(d2))
    # refine the discrete minimum with a bounded scalar search
    def dist2(xx):
        ff = wall_profile(spec, xx)
        return (xx - c[0]) ** 2 + min(abs(ff - c[1]), abs(-ff - c[1])) ** 2

    lo = x[max(k - 1, 0)]
    hi = x[min(k + 1, len(x) - 1)]
    res = minimize_scalar(dist2, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    return float(np.sqrt(min(res.fun, d2[k])))


def _distance_to_polyline(nodes: np.ndarray, c: np.ndarray) -> float:
    a = nodes
    b = np.roll(nodes, -1, axis=0)
    d = b - a
    t = np.clip(np.einsum("ij,ij->i", c - a, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
    proj = a + t[:, None] * d
    return float(np.min(np.linalg.norm(proj - c, axis=1)))


@dataclass(frozen=True)
class InitialNucleus:
    curve: ClosedCurve
    center: np.ndarray
    radius: float
    below_target_area: bool


def initial_nucleus(
    spec: ChannelSpec,
    cortex,
    n: int,
    contact_range: float,
    target_area: float | None = None,
    x_center: float | None = None,
) -> InitialNucleus:
    """Largest circle on the channel axis with clearance to walls and cortex.

    The circle dilated by ``1/xi`` must stay inside the channel and the circle
    must keep a distance of at least ``contact_range`` from the cortex, so the
    initial contact force vanishes.
    """
    c = np.array([np.pi / (2.0 * spec.f_omega0) if x_center is None else x_center, 0.0])
    x = as_nodes(cortex)
    r_wall = _distance_to_walls(spec, c, span=2.0 * spec.wavelength + spec.f_width) - 1.0 / spec.xi
    r_cortex = _distance_to_polyline(x, c) - contact_range
    radius = min(r_wall, r_cortex)
    if not radius > 0:
        raise ConfigurationError("no admissible initial nucleus radius")
    t = 2.0 * np.pi * np.arange(n) / n
    nodes = c + radius * np.column_stack([np.cos(t), np.sin(t)])
    curve = ClosedCurve(nodes)
    short = False
    if target_area is not None:
        if polygon_area(curve) <= target_area:
            short = True
            log.warning(
                "initial nucleus area %.4f is below the target area %.4f", polygon_area(curve), target_area
            )
    return InitialNucleus(curve=curve, center=c, radius=float(radius), below_target_area=short)
