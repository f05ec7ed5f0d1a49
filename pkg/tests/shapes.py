"""Random test geometries shared by several test modules."""

from __future__ import annotations

import numpy as np


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    t = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def star_polygon(rng: np.random.Generator, n: int = 250, center=(0.0, 0.0), noise: float = 0.02) -> np.ndarray:
    """Random polygon star-shaped about ``center`` (angles sorted, radii > 0)."""
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    k = np.arange(1, 6)
    amp = rng.uniform(-0.15, 0.15, (2, 5)) / k
    r = 1.0 + amp[0] @ np.cos(np.outer(k, t)) + amp[1] @ np.sin(np.outer(k, t))
    r *= rng.uniform(0.5, 2.0)
    r *= 1.0 + noise * rng.standard_normal(n)
    return np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])


def subdivide(poly: np.ndarray, per_edge: int) -> np.ndarray:
    nxt = np.roll(poly, -1, axis=0)
    s = np.arange(per_edge) / per_edge
    pts = poly[:, None, :] + s[None, :, None] * (nxt - poly)[:, None, :]
    return pts.reshape(-1, 2)


def u_shape(rng: np.random.Generator):
    """Random U-shaped (not star-shaped) polygon and a centre inside one arm."""
    w = rng.uniform(0.3, 0.8)  # arm width
    gap = rng.uniform(0.3, 1.0)
    h = rng.uniform(1.5, 3.0)
    base = rng.uniform(0.3, 0.8)
    wt = 2 * w + gap
    poly = np.array(
        [[0, 0], [wt, 0], [wt, h], [w + gap, h], [w + gap, base], [w, base], [w, h], [0, h]],
        dtype=float,
    )
    poly = subdivide(poly, int(rng.integers(1, 12)))
    center = np.array([rng.uniform(0.1, 0.9) * w, rng.uniform(base + 0.1, h - 0.1)])
    ang = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    shift = rng.uniform(-1, 1, 2)
    return poly @ rot.T + shift, rot @ center + shift


def brute_force_first_hit(x: np.ndarray, center: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Nearest ray/segment intersection, enumerating every segment."""
    d = np.roll(x, -1, axis=0) - x
    w = x - center
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)[:, None, :]
    cr = lambda a, b: a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    den = cr(e, d[None])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cr(w[None], d[None]) / den
        lam = cr(w[None], e) / den
    t = np.where((t > 0) & (lam >= -1e-14) & (lam <= 1 + 1e-14), t, np.inf)
    tmin = t.min(axis=1)
    return center + tmin[:, None] * e[:, 0, :]
