"""Closed-form polar quadrature over the visible cortex.

Along a visible piece of segment ``i`` the microtubule angle and the segment
parameter are related by ``d theta = |d^perp . p0| / q(lambda) d lambda`` with
``p0 = X_i - X_c``, ``d = X_{i+1} - X_i`` and
``q(lambda) = |p0 + lambda d|^2 = c0 + c1 lambda + c2 lambda^2``. All integrals
over theta therefore reduce to the rational integrals
``int lambda^alpha / q d lambda`` for ``alpha`` in {0, 1, 2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .geometry import as_nodes, cross2, perp
from .visibility import VisibilityResult

# relative discriminant below which a segment is treated as radial
DEGENERATE_DISCRIMINANT = 1e-14
# closed forms losing more than this factor to cancellation are replaced by
# Gauss-Legendre, which is spectrally accurate in exactly that regime
_CANCELLATION_LIMIT = 1e2
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class PolarSegment:
    """Visible sub-segments in polar form about a centre (vectorised).

    Every field is an array with one entry per sub-segment. ``p0``/``p1`` are
    the full segment endpoints relative to the centre and ``[lam_a, lam_b]``
    the visible parameter range whose angles are ``[theta_a, theta_b]``.
    """

    p0: np.ndarray
    p1: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray
    theta_a: np.ndarray
    theta_b: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    @classmethod
    def from_points(cls, p0, p1, lam_a=0.0, lam_b=1.0, theta_a=None, theta_b=None) -> "PolarSegment":
        """Build from endpoints already expressed relative to the centre."""
        p0 = np.atleast_2d(np.asarray(p0, dtype=float))
        p1 = np.atleast_2d(np.asarray(p1, dtype=float))
        lam_a = np.broadcast_to(np.asarray(lam_a, dtype=float), p0.shape[:1]).copy()
        lam_b = np.broadcast_to(np.asarray(lam_b, dtype=float), p0.shape[:1]).copy()
        d = p1 - p0
        pa = p0 + lam_a[:, None] * d
        pb = p0 + lam_b[:, None] * d
        if theta_a is None:
            theta_a = np.arctan2(pa[:, 1], pa[:, 0])
        theta_a = np.broadcast_to(np.asarray(theta_a, dtype=float), p0.shape[:1]).copy()
        if theta_b is None:
            theta_b = theta_a + np.arctan2(cross2(pa, pb), np.einsum("ij,ij->i", pa, pb))
        theta_b = np.broadcast_to(np.asarray(theta_b, dtype=float), p0.shape[:1]).copy()
        det = cross2(p0, p1)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = d[:, 1] / det
            b = -d[:, 0] / det
        return cls(
            p0=p0,
            p1=p1,
            lam_a=lam_a,
            lam_b=lam_b,
            theta_a=theta_a,
            theta_b=theta_b,
            a=a,
            b=b,
            c0=np.einsum("ij,ij->i", p0, p0),
            c1=2.0 * np.einsum("ij,ij->i", d, p0),
            c2=np.einsum("ij,ij->i", d, d),
        )

    @property
    def discriminant(self) -> np.ndarray:
        return 4.0 * self.c2 * self.c0 - self.c1**2

    @property
    def jacobian_numerator(self) -> np.ndarray:
        """|d^perp . p0|, the constant in d theta / d lambda."""
        return np.abs(cross2(self.p1 - self.p0, self.p0))

    def __len__(self) -> int:
        return len(self.c0)


def polar_segments(curve, center, vis: VisibilityResult) -> tuple[PolarSegment, np.ndarray]:
    """Polar description of every visible arc and the segment index of each."""
    x = as_nodes(curve)
    c = np.asarray(center, dtype=float)
    s = vis.segment
    p0 = x[s] - c
    p1 = x[(s + 1) % len(x)] - c
    # angles from the decomposition are authoritative (already unwrapped)
    seg = PolarSegment.from_points(p0, p1, vis.lam_a, vis.lam_b, theta_a=vis.theta_a, theta_b=vis.theta_b)
    return seg, s


# ---------------------------------------------------------------------------
# rational integrals int_lo^hi lambda^alpha / (c0 + c1 lambda + c2 lambda^2)
# ---------------------------------------------------------------------------


def _numeric_rational(c0, c1, c2, alpha, lo, hi) -> float:
    val, _ = integrate.quad(
        lambda t: t**alpha / (c0 + c1 * t + c2 * t * t), lo, hi, epsabs=0.0, epsrel=1e-12, limit=200
    )
    return float(val)


def _gauss_rational(c0, c1, c2, alpha, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[..., None] + half[..., None] * _GL_X
    q = c0[..., None] + c1[..., None] * t + c2[..., None] * t * t
    return half * np.sum(_GL_W * t**alpha / q, axis=-1)


def rational_segment_integral(c0, c1, c2, alpha: int, lo=0.0, hi=1.0, return_flags: bool = False):
    """``int_lo^hi lambda^alpha / (c0 + c1 lambda + c2 lambda^2) d lambda``.

    Vectorised over the coefficient arrays. Requires ``c2 > 0`` and a positive
    discriminant ``4 c2 c0 - c1^2``; pass ``return_flags=True`` to also get the
    mask of entries that were evaluated by the numerical fallback instead.
    """
    if alpha not in (0, 1, 2):
        raise ValueError("alpha must be 0, 1 or 2")
    c0, c1, c2, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (c0, c1, c2, lo, hi)))
    scalar = c0.ndim == 0
    c0, c1, c2, lo, hi = (np.atleast_1d(v) for v in (c0, c1, c2, lo, hi))
    if np.any(~(c2 > 0.0)):
        raise QuadratureError("rational integral needs c2 > 0")
    disc = 4.0 * c2 * c0 - c1 * c1
    degenerate = disc <= DEGENERATE_DISCRIMINANT * 4.0 * c2 * c0
    if not return_flags and np.any(disc <= 0.0):
        raise QuadratureError("non-positive discriminant")

    sd = np.sqrt(np.where(degenerate, 1.0, disc))
    ua = (2.0 * c2 * lo + c1) / sd
    ub = (2.0 * c2 * hi + c1) / sd
    # stable arctangent difference
    den = 1.0 + ua * ub
    with np.errstate(divide="ignore", invalid="ignore"):
        du = 2.0 * c2 * (hi - lo) / sd
        at = np.where(den > 0.0, np.arctan(du / den), np.arctan(ub) - np.arctan(ua))
    qa = c0 + lo * (c1 + c2 * lo)
    dq = (hi - lo) * (c1 + c2 * (hi + lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log1p(dq / qa)
    i0 = 2.0 * at / sd
    if alpha == 0:
        val = i0
        scale = np.abs(val)
    elif alpha == 1:
        t1 = lg
        t2 = c1 * i0
        val = (t1 - t2) / (2.0 * c2)
        scale = (np.abs(t1) + np.abs(t2)) / (2.0 * c2)
    else:
        t1 = 2.0 * c2 * (hi - lo)
        t2 = c1 * lg
        t3 = (c1 * c1 - 2.0 * c2 * c0) * i0
        val = (t1 - t2 + t3) / (2.0 * c2 * c2)
        scale = (np.abs(t1) + np.abs(t2) + np.abs(t3)) / (2.0 * c2 * c2)

    with np.errstate(divide="ignore", invalid="ignore"):
        cancel = scale > _CANCELLATION_LIMIT * np.abs(val)
    cancel &= ~degenerate
    if np.any(cancel):
        val = np.where(cancel, _gauss_rational(c0, c1, c2, alpha, lo, hi), val)
    if np.any(degenerate):
        val = val.copy()
        for k in np.flatnonzero(degenerate):
            val[k] = _numeric_rational(c0[k], c1[k], c2[k], alpha, lo[k], hi[k])
    if scalar:
        val = val[0]
        degenerate = bool(degenerate[0])
    return (val, degenerate) if return_flags else val


# ---------------------------------------------------------------------------
# theta antiderivatives
# ---------------------------------------------------------------------------


def _r2_antiderivative(a, b, theta):
    c, s = np.cos(theta), np.sin(theta)
    rho = a * c + b * s
    use_a = np.abs(a) >= np.abs(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(use_a, s / (a * rho), -c / (b * rho))


def integral_r2(segments: PolarSegment) -> float:
    """``int r(theta)^2 d theta`` over all the given sub-segments."""
    seg = segments
    f = _r2_antiderivative(seg.a, seg.b, seg.theta_b) - _r2_antiderivative(seg.a, seg.b, seg.theta_a)
    bad = ~np.isfinite(f) | (seg.discriminant <= DEGENERATE_DISCRIMINANT * 4.0 * seg.c2 * seg.c0)
    if np.any(bad):
        # through-centre line: r^2 d theta = |cross| d lambda, zero measure
        f = np.where(bad, seg.jacobian_numerator * (seg.lam_b - seg.lam_a), f)
    return float(np.sum(f))


def integral_r_eperp(segments: PolarSegment) -> np.ndarray:
    """``int r(theta) e_theta^perp d theta`` over all the given sub-segments."""
    seg = segments
    d = seg.p1 - seg.p0
    ra = np.linalg.norm(seg.p0 + seg.lam_a[:, None] * d, axis=1)
    rb = np.linalg.norm(seg.p0 + seg.lam_b[:, None] * d, axis=1)
    log_ratio = np.log(rb / ra)
    dth = seg.theta_b - seg.theta_a
    inv = 1.0 / (seg.a**2 + seg.b**2)
    vx = inv * (-seg.a * log_ratio - seg.b * dth)
    vy = inv * (-seg.b * log_ratio + seg.a * dth)
    out = np.column_stack([vx, vy])
    bad = ~np.all(np.isfinite(out), axis=1)
    if np.any(bad):
        out[bad] = 0.0
    return out.sum(axis=0)


# ---------------------------------------------------------------------------
# nodal quadrature weights
# ---------------------------------------------------------------------------


def _rational_moments(seg: PolarSegment):
    i0, f0 = rational_segment_integral(seg.c0, seg.c1, seg.c2, 0, seg.lam_a, seg.lam_b, return_flags=True)
    i1, _ = rational_segment_integral(seg.c0, seg.c1, seg.c2, 1, seg.lam_a, seg.lam_b, return_flags=True)
    i2, _ = rational_segment_integral(seg.c0, seg.c1, seg.c2, 2, seg.lam_a, seg.lam_b, return_flags=True)
    return i0, i1, i2


@dataclass(frozen=True)
class NodalWeights:
    """Linear functionals on nodal data induced by theta integration.

    ``theta @ f`` approximates ``int f(s_MT(theta)) d theta`` and
    ``sum_i f_i * r_eperp[i]`` approximates ``int r e_theta^perp f d theta``
    for piecewise linear ``f`` (scalar or vector valued ``f`` dotted in).
    """

    theta: np.ndarray
    r_eperp: np.ndarray


def nodal_weights(curve, center, vis: VisibilityResult) -> NodalWeights:
    x = as_nodes(curve)
    n = len(x)
    seg, s = polar_segments(x, center, vis)
    i0, i1, i2 = _rational_moments(seg)
    jac = seg.jacobian_numerator
    d = seg.p1 - seg.p0
    p0 = seg.p0
    w_lo = jac * (i0 - i1)
    w_hi = jac * i1
    u_lo = jac[:, None] * perp(p0 * (i0 - i1)[:, None] + d * (i1 - i2)[:, None])
    u_hi = jac[:, None] * perp(p0 * i1[:, None] + d * i2[:, None])
    nxt = (s + 1) % n
    theta = np.bincount(s, weights=w_lo, minlength=n) + np.bincount(nxt, weights=w_hi, minlength=n)
    r_eperp = np.zeros((n, 2))
    np.add.at(r_eperp, s, u_lo)
    np.add.at(r_eperp, nxt, u_hi)
    return NodalWeights(theta=theta, r_eperp=r_eperp)


def integrate_nodal_over_theta(curve, center, vis: VisibilityResult, f_s) -> np.ndarray:
    """``int f(s_MT(theta)) d theta`` with ``f`` linear between nodes.

    ``f_s`` may be ``(N,)`` or ``(N, k)``; the result has shape ``()`` or ``(k,)``.
    """
    w = nodal_weights(curve, center, vis)
    return np.tensordot(w.theta, np.asarray(f_s, dtype=float), axes=(0, 0))


def integrate_weighted_r_eperp(curve, center, vis: VisibilityResult, f_s) -> np.ndarray:
    """``int |X_theta - X_c| e_theta^perp f(s_MT(theta)) d theta``.

    Scalar ``f_s`` of shape ``(N,)`` gives a 2-vector. Vector-valued ``f_s`` of
    shape ``(N, 2)`` is dotted with ``e_theta^perp``, giving a scalar.
    """
    w = nodal_weights(curve, center, vis)
    f = np.asarray(f_s, dtype=float)
    if f.ndim == 1:
        return w.r_eperp.T @ f
    return float(np.einsum("ij,ij->", w.r_eperp, f))


def theta_gauss_points(curve, center, vis: VisibilityResult, order: int = 8):
    """Gauss-Legendre nodes in theta on every visible arc.

    Returns ``(theta, weight, segment, lam)`` flattened over arcs; used for
    integrands that are not rational in lambda (general microtubule force
    laws).
    """
    gx, gw = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (vis.theta_b - vis.theta_a)
    mid = 0.5 * (vis.theta_b + vis.theta_a)
    theta = (mid[:, None] + half[:, None] * gx).ravel()
    weight = (half[:, None] * gw).ravel()
    arc = np.repeat(np.arange(len(vis)), order)
    x = as_nodes(curve)
    c = np.asarray(center, dtype=float)
    s = vis.segment[arc]
    p0 = x[s]
    d = x[(s + 1) % len(x)] - p0
    e = np.column_stack([np.cos(theta), np.sin(theta)])
    lam = np.clip(cross2(p0 - c, e) / cross2(e, d), 0.0, 1.0)
    return theta, weight, s, lam
