"""Visibility of the cortex from the centrosome.

The microtubule of angle ``theta`` anchors at the first intersection of the ray
``X_c + lambda e_theta`` with the cortex polygon. Sorting the polar angles of the
cortex nodes splits the circle into wedges containing no vertex; inside each
wedge the first-hit segment is fixed, so the whole anchoring map is described by
one (segment, lambda-interval, angle-interval) triple per wedge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_nodes, cross2, node_tangents_normals, points_inside

TWO_PI = 2.0 * np.pi
# Wedges narrower than this are dropped (nodes at numerically equal angles).
_MIN_WEDGE = 1e-15


class VisibilityError(ValueError):
    """Raised when the viewpoint is not strictly inside the curve."""


@dataclass(frozen=True)
class VisibilityResult:
    """Decomposition of the circle of directions into visible arcs.

    ``segment[k]`` is hit for angles in ``[theta_a[k], theta_b[k]]`` at segment
    parameters ``[lam_a[k], lam_b[k]]``. Angles are unwrapped so that
    ``theta_b > theta_a`` and consecutive arcs are contiguous.
    """

    center: np.ndarray
    segment: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray
    theta_a: np.ndarray
    theta_b: np.ndarray
    blind_mask: np.ndarray
    visible_angle_measure: float

    @property
    def star_shaped(self) -> bool:
        return not bool(self.blind_mask.any())

    def __len__(self) -> int:
        return len(self.segment)


def _ray_hits(center, directions, x):
    """Distance along each ray to each segment (inf where missed).

    Returns ``(t, lam)`` of shape (n_rays, n_segments).
    """
    d = np.roll(x, -1, axis=0) - x
    w = x - center
    e = directions[:, None, :]
    denom = cross2(e, d[None, :, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross2(w[None, :, :], d[None, :, :]) / denom
        lam = cross2(w[None, :, :], e) / denom
    ok = (denom != 0.0) & (t > 0.0) & (lam >= 0.0) & (lam <= 1.0)
    return np.where(ok, t, np.inf), lam


def _line_param(center, theta, p0, p1):
    """Parameter lambda where the ray at angle theta meets the line p0 -> p1."""
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    d = p1 - p0
    w = p0 - center
    denom = cross2(e, d)
    lam = cross2(w, e) / denom
    t = cross2(w, d) / denom
    return lam, t


def visibility_polygon(curve, center) -> VisibilityResult:
    """Visible arcs of a closed curve seen from an interior point."""
    x = as_nodes(curve)
    c = np.asarray(center, dtype=float)
    n = len(x)
    rel = x - c
    r = np.linalg.norm(rel, axis=1)
    if np.any(r == 0.0):
        raise VisibilityError("centre coincides with a cortex node")
    if not points_inside(x, c[None, :])[0]:
        raise VisibilityError("centre is outside the curve")
    seg_dir = np.roll(x, -1, axis=0) - x
    seg_len = np.linalg.norm(seg_dir, axis=1)
    # distance from the centre to each segment (guards "on the boundary")
    lam0 = np.clip(-np.einsum("ij,ij->i", rel, seg_dir) / seg_len**2, 0.0, 1.0)
    dist = np.linalg.norm(rel + lam0[:, None] * seg_dir, axis=1)
    if dist.min() <= 1e-12 * max(1.0, r.max()):
        raise VisibilityError("centre lies on the boundary")

    phi = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), TWO_PI)
    crit = np.unique(phi)
    starts = crit
    ends = np.append(crit[1:], crit[0] + TWO_PI)
    width = ends - starts
    keep = width > _MIN_WEDGE
    starts, ends = starts[keep], ends[keep]
    mids = 0.5 * (starts + ends)
    dirs = np.column_stack([np.cos(mids), np.sin(mids)])
    t, _ = _ray_hits(c, dirs, x)
    seg = np.argmin(t, axis=1)
    if not np.all(np.isfinite(t[np.arange(len(seg)), seg])):
        raise VisibilityError("ray escaped the curve; centre not interior")

    p0 = x[seg]
    p1 = x[(seg + 1) % n]
    lam_a, t_a = _line_param(c, starts, p0, p1)
    lam_b, t_b = _line_param(c, ends, p0, p1)
    lam_a = np.clip(lam_a, 0.0, 1.0)
    lam_b = np.clip(lam_b, 0.0, 1.0)

    # merge neighbouring wedges that hit the same segment
    if len(seg) > 1:
        brk = np.flatnonzero(seg != np.roll(seg, 1))
        if brk.size == 0:
            brk = np.array([0])
        first = brk
        last = np.append(brk[1:], brk[0] + len(seg)) - 1
        last = last % len(seg)
        m_seg = seg[first]
        m_lam_a = lam_a[first]
        m_lam_b = lam_b[last]
        m_th_a = starts[first]
        m_th_b = m_th_a + np.mod(ends[last] - starts[first], TWO_PI)
        # a single arc covering everything would have zero modular width
        m_th_b = np.where(m_th_b <= m_th_a, m_th_a + TWO_PI, m_th_b)
        order = np.argsort(m_th_a)
        seg, lam_a, lam_b, starts, ends = (
            m_seg[order],
            m_lam_a[order],
            m_lam_b[order],
            m_th_a[order],
            m_th_b[order],
        )

    blind = _blind_nodes(x, c, phi, r, crit[keep], seg_first_hit=(starts, ends, seg))
    measure = float(np.sum(ends - starts))
    return VisibilityResult(
        center=c,
        segment=seg.astype(int),
        lam_a=lam_a,
        lam_b=lam_b,
        theta_a=starts,
        theta_b=ends,
        blind_mask=blind,
        visible_angle_measure=measure,
    )


def _blind_nodes(x, c, phi, r, _crit, seg_first_hit):
    """A node is blind when the first hit towards it is closer than the node."""
    starts, ends, seg = seg_first_hit
    n = len(x)
    base = starts[0]
    rel_phi = np.mod(phi - base, TWO_PI) + base
    # arc whose half-open interval [start, end) contains the node angle, and the
    # arc just before it (the node angle may sit exactly on a boundary)
    k_right = np.searchsorted(starts, rel_phi, side="right") - 1
    k_right = np.clip(k_right, 0, len(starts) - 1)
    k_left = np.where(
        np.isclose(rel_phi, starts[k_right], rtol=0.0, atol=1e-13),
        (k_right - 1) % len(starts),
        k_right,
    )
    blind = np.zeros(n, dtype=bool)
    for ks in (k_right, k_left):
        s = seg[ks]
        _, t = _line_param(c, phi, x[s], x[(s + 1) % n])
        blind |= t < r * (1.0 - 1e-9)
    return blind


def locate_arc(vis: VisibilityResult, theta) -> np.ndarray:
    """Index of the arc containing each angle (boundary angles go right)."""
    th = np.asarray(theta, dtype=float)
    base = vis.theta_a[0]
    rel = np.mod(th - base, TWO_PI) + base
    k = np.searchsorted(vis.theta_a, rel, side="right") - 1
    return np.clip(k, 0, len(vis.theta_a) - 1)


def mt_anchor(vis: VisibilityResult, curve, center, theta):
    """Anchoring point of the microtubule of angle ``theta``.

    Returns ``(segment, lam, point)``; vectorised over ``theta``.
    """
    x = as_nodes(curve)
    c = np.asarray(center, dtype=float)
    th = np.asarray(theta, dtype=float)
    k = locate_arc(vis, th)
    s = vis.segment[k]
    p0 = x[s]
    p1 = x[(s + 1) % len(x)]
    lam, _ = _line_param(c, th, p0, p1)
    lam = np.clip(lam, 0.0, 1.0)
    point = p0 + lam[..., None] * (p1 - p0)
    return s, lam, point


def mt_density(curve, center, vis: VisibilityResult, ds: float | None = None) -> np.ndarray:
    """Microtubule endpoint density |d theta / d s| at every node.

    ``ds`` is the Lagrangian grid step (defaults to 1/N). Blind nodes get 0.
    """
    x = as_nodes(curve)
    c = np.asarray(center, dtype=float)
    n = len(x)
    ds = 1.0 / n if ds is None else ds
    rel = x - c
    r2 = np.einsum("ij,ij->i", rel, rel)
    if np.any(r2 == 0.0):
        raise VisibilityError("cortex node coincides with the centrosome")
    _, normal, chord = node_tangents_normals(x)
    speed = chord / (2.0 * ds)
    rho = speed * np.einsum("ij,ij->i", normal, rel) / r2
    rho = np.maximum(rho, 0.0)
    rho[vis.blind_mask] = 0.0
    return rho
