"""Closed-polyline primitives.

Every routine accepts either a :class:`ClosedCurve` or a raw ``(N, 2)`` array of
nodes. Index arithmetic is cyclic. Normals point outward for a counterclockwise
curve: ``n = -tau_perp`` with ``(a, b)_perp = (-b, a)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateCurveError(ValueError):
    """Raised when a curve has too few nodes or a zero-length segment."""


def perp(v: np.ndarray) -> np.ndarray:
    """Rotate vectors by +90 degrees: (a, b) -> (-b, a)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(nodes: np.ndarray) -> float:
    """Shoelace formula; positive for counterclockwise curves."""
    x, y = nodes[:, 0], nodes[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class ClosedCurve:
    """A positively oriented closed polyline.

    Clockwise input is reversed at construction and ``was_reversed`` is set.
    """

    nodes: np.ndarray
    was_reversed: bool = field(default=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.nodes, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DegenerateCurveError("nodes must have shape (N, 2)")
        if pts.shape[0] < 3:
            raise DegenerateCurveError(f"a closed curve needs at least 3 nodes, got {pts.shape[0]}")
        check_segments(pts)
        reversed_ = False
        if signed_area(pts) < 0.0:
            pts = pts[::-1].copy()
            reversed_ = True
        pts.setflags(write=False)
        object.__setattr__(self, "nodes", pts)
        object.__setattr__(self, "was_reversed", reversed_ or self.was_reversed)

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def translated(self, v) -> "ClosedCurve":
        return ClosedCurve(self.nodes + np.asarray(v, dtype=float))


def as_nodes(curve) -> np.ndarray:
    if isinstance(curve, ClosedCurve):
        return curve.nodes
    return np.asarray(curve, dtype=float)


def check_segments(nodes: np.ndarray) -> np.ndarray:
    """Return segment lengths, raising on the first zero-length segment."""
    lengths = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    bad = np.flatnonzero(~(lengths > 0.0))
    if bad.size:
        i = int(bad[0])
        raise DegenerateCurveError(
            f"degenerate segment {i} -> {(i + 1) % len(nodes)} (zero length)"
        )
    return lengths


def segment_vectors(curve) -> np.ndarray:
    """X_{i+1} - X_i for every i."""
    x = as_nodes(curve)
    return np.roll(x, -1, axis=0) - x


def tangents_normals(curve) -> tuple[np.ndarray, np.ndarray]:
    """Unit tangent and outward normal of every segment [X_i, X_{i+1}]."""
    x = as_nodes(curve)
    lengths = check_segments(x)
    tau = segment_vectors(x) / lengths[:, None]
    return tau, -perp(tau)


def node_tangents_normals(curve) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Central-difference node tangents and outward normals.

    Returns ``(tau, n, chord)`` where ``chord = |X_{i+1} - X_{i-1}|``.
    """
    x = as_nodes(curve)
    d = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
    chord = np.linalg.norm(d, axis=1)
    bad = np.flatnonzero(~(chord > 0.0))
    if bad.size:
        raise DegenerateCurveError(f"coincident neighbours around node {int(bad[0])}")
    tau = d / chord[:, None]
    return tau, -perp(tau), chord


def polygon_area(curve) -> float:
    """Enclosed area as sum_i 1/4 X_i . (l_i n_i + l_{i-1} n_{i-1}).

    With outward normals this telescopes exactly to the shoelace formula, so
    the shoelace sum is what is evaluated. Negative for clockwise input arrays.
    """
    return signed_area(as_nodes(curve))


def area_gradient(curve) -> np.ndarray:
    """d(area)/dX_i = 1/2 (X_{i+1} - X_{i-1}) rotated by -90 degrees."""
    x = as_nodes(curve)
    return -0.5 * perp(np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0))


def arc_lengths(curve) -> tuple[np.ndarray, np.ndarray, float]:
    """Segment lengths, cumulative arc length (N + 1 entries) and total length."""
    x = as_nodes(curve)
    seg = np.linalg.norm(segment_vectors(x), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    return seg, cum, float(cum[-1])


def geodesic_distances_from(curve, i: int) -> np.ndarray:
    """Along-curve distance from node ``i`` to every node (shorter way round)."""
    _, cum, total = arc_lengths(curve)
    forward = np.abs(cum[:-1] - cum[i])
    return np.minimum(forward, total - forward)


def geodesic_distance(curve, i: int, j: int) -> float:
    _, cum, total = arc_lengths(curve)
    n = len(cum) - 1
    d = abs(cum[j % n] - cum[i % n])
    return float(min(d, total - d))


def length_weighted_centroid(curve) -> tuple[np.ndarray, float]:
    """Centroid of the curve as a wire: (1/L) int Y dl, and its length L."""
    x = as_nodes(curve)
    nxt = np.roll(x, -1, axis=0)
    seg = np.linalg.norm(nxt - x, axis=1)
    total = float(seg.sum())
    centroid = (0.5 * (x + nxt) * seg[:, None]).sum(axis=0) / total
    return centroid, total


def winding_number(curve, points: np.ndarray) -> np.ndarray:
    """Winding number of the closed polyline around each query point.

    Signed upward/downward edge crossings of the horizontal ray to the right.
    """
    x = as_nodes(curve)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x0, y0 = x[:, 0][None, :], x[:, 1][None, :]
    nxt = np.roll(x, -1, axis=0)
    x1, y1 = nxt[:, 0][None, :], nxt[:, 1][None, :]
    px, py = p[:, 0][:, None], p[:, 1][:, None]
    side = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
    up = (y0 <= py) & (y1 > py) & (side > 0)
    down = (y0 > py) & (y1 <= py) & (side < 0)
    return up.sum(axis=1) - down.sum(axis=1)


def points_inside(curve, points: np.ndarray) -> np.ndarray:
    return winding_number(curve, points) != 0


def resample_closed(points: np.ndarray, n: int) -> np.ndarray:
    """Evenly spaced (by arc length) resampling of a dense closed polyline."""
    p = np.asarray(points, dtype=float)
    closed = np.vstack([p, p[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    targets = np.arange(n) * cum[-1] / n
    xs = np.interp(targets, cum, closed[:, 0])
    ys = np.interp(targets, cum, closed[:, 1])
    return np.column_stack([xs, ys])
