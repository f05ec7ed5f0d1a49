import mpmath
import numpy as np
import pytest

from confine_sim import mtquad as q
from confine_sim.visibility import mt_anchor, visibility_polygon
from shapes import regular_polygon, star_polygon, u_shape

mpmath.mp.dps = 30


def mp_rational(c0, c1, c2, alpha, lo=0.0, hi=1.0):
    return float(mpmath.quad(lambda t: t**alpha / (c0 + c1 * t + c2 * t * t), [lo, hi]))


def random_segment(rng):
    """Random segment not collinear with the origin, seen counterclockwise."""
    while True:
        p0 = rng.uniform(-2, 2, 2)
        p1 = p0 + rng.uniform(-2, 2, 2) * rng.choice([1.0, 0.05, 0.005])
        cr = p0[0] * p1[1] - p0[1] * p1[0]
        if abs(cr) > 1e-3 * np.linalg.norm(p0) * np.linalg.norm(p1 - p0):
            return (p0, p1) if cr > 0 else (p1, p0)


def test_rational_textbook_values():
    assert q.rational_segment_integral(1, 0, 1, 0) == pytest.approx(np.pi / 4, rel=1e-15)
    assert q.rational_segment_integral(1, 0, 1, 1) == pytest.approx(0.5 * np.log(2), rel=1e-15)
    assert q.rational_segment_integral(1, 0, 1, 2) == pytest.approx(1 - np.pi / 4, rel=1e-14)


def test_rational_rejects_bad_input():
    with pytest.raises(q.QuadratureError):
        q.rational_segment_integral(1, 2, 1, 0)  # discriminant 0
    with pytest.raises(q.QuadratureError):
        q.rational_segment_integral(1, 0, 0, 0)
    with pytest.raises(ValueError):
        q.rational_segment_integral(1, 0, 1, 3)


def test_rational_against_oracle_random():
    rng = np.random.default_rng(21)
    for _ in range(300):
        p0, p1 = random_segment(rng)
        d = p1 - p0
        c0, c1, c2 = p0 @ p0, 2 * d @ p0, d @ d
        lo, hi = np.sort(rng.uniform(0, 1, 2))
        for alpha in (0, 1, 2):
            for a, b in ((0.0, 1.0), (lo, hi)):
                ref = mp_rational(c0, c1, c2, alpha, a, b)
                got = q.rational_segment_integral(c0, c1, c2, alpha, a, b)
                assert got == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_near_radial_segment_uses_fallback():
    p0 = np.array([1.0, 0.0])
    p1 = np.array([2.0, 1e-9])
    d = p1 - p0
    c0, c1, c2 = p0 @ p0, 2 * d @ p0, d @ d
    val, flag = q.rational_segment_integral(c0, c1, c2, 1, return_flags=True)
    assert flag
    assert val == pytest.approx(mp_rational(c0, c1, c2, 1), rel=1e-10)


def _theta_oracles(p0, p1):
    ta = np.arctan2(p0[1], p0[0])
    tb = ta + np.arctan2(p0[0] * p1[1] - p0[1] * p1[0], p0 @ p1)
    d = p1 - p0
    det = p0[0] * p1[1] - p0[1] * p1[0]
    a, b = d[1] / det, -d[0] / det
    r = lambda t: 1 / (a * mpmath.cos(t) + b * mpmath.sin(t))
    r2 = float(mpmath.quad(lambda t: r(t) ** 2, [ta, tb]))
    ex = float(mpmath.quad(lambda t: -r(t) * mpmath.sin(t), [ta, tb]))
    ey = float(mpmath.quad(lambda t: r(t) * mpmath.cos(t), [ta, tb]))
    return r2, np.array([ex, ey])


def test_polar_segment_reproduces_endpoint_radii():
    rng = np.random.default_rng(22)
    for _ in range(50):
        p0, p1 = random_segment(rng)
        s = q.PolarSegment.from_points(p0, p1)
        for p, th in ((p0, s.theta_a[0]), (p1, s.theta_b[0])):
            r = 1 / (s.a[0] * np.cos(th) + s.b[0] * np.sin(th))
            assert r == pytest.approx(np.linalg.norm(p), rel=1e-10)
        assert s.discriminant[0] > 0


def test_theta_closed_forms_against_oracle():
    rng = np.random.default_rng(23)
    for _ in range(200):
        p0, p1 = random_segment(rng)
        s = q.PolarSegment.from_points(p0, p1)
        r2, v = _theta_oracles(p0, p1)
        assert q.integral_r2(s) == pytest.approx(r2, rel=1e-10)
        assert np.linalg.norm(q.integral_r_eperp(s) - v) <= 1e-10 * np.linalg.norm(v)
        # r^2 d theta is twice the swept triangle area
        assert q.integral_r2(s) == pytest.approx(p0[0] * p1[1] - p0[1] * p1[0], rel=1e-10)


def test_closed_polygon_integrals():
    x = regular_polygon(100)
    vis = visibility_polygon(x, [0, 0])
    seg, _ = q.polar_segments(x, [0, 0], vis)
    assert q.integral_r2(seg) == pytest.approx(2 * np.pi, rel=2e-3)
    assert np.linalg.norm(q.integral_r_eperp(seg)) < 1e-10
    seg2, _ = q.polar_segments(2 * x, [0, 0], visibility_polygon(2 * x, [0, 0]))
    assert q.integral_r2(seg2) == pytest.approx(4 * q.integral_r2(seg), rel=1e-13)
    # arc measures from the decomposition sum to the full circle
    assert np.sum(seg.theta_b - seg.theta_a) == pytest.approx(2 * np.pi, abs=1e-10)


def test_reflection_negates_y_component():
    rng = np.random.default_rng(24)
    x = star_polygon(rng, n=80)
    c = np.array([0.1, 0.2])
    v1 = q.integral_r_eperp(q.polar_segments(x, c, visibility_polygon(x, c))[0])
    xr = x[::-1] * [1, -1]
    cr = c * [1, -1]
    v2 = q.integral_r_eperp(q.polar_segments(xr, cr, visibility_polygon(xr, cr))[0])
    assert v2 == pytest.approx(v1 * [-1, 1], abs=1e-12)


def _dense_theta(x, c, vis, f, per_arc=400):
    """Composite midpoint over theta with the linear interpolant of f."""
    tot_s = 0.0
    tot_v = np.zeros(2)
    for k in range(len(vis)):
        h = (vis.theta_b[k] - vis.theta_a[k]) / per_arc
        th = vis.theta_a[k] + h * (np.arange(per_arc) + 0.5)
        s, lam, p = mt_anchor(vis, x, c, th)
        fv = f[s] * (1 - lam) + f[(s + 1) % len(x)] * lam
        r = np.linalg.norm(p - c, axis=1)
        eperp = np.column_stack([-np.sin(th), np.cos(th)])
        tot_s += h * fv.sum()
        tot_v += h * ((r * fv)[:, None] * eperp).sum(axis=0)
    return tot_s, tot_v


def test_nodal_integrals_against_dense_sampling():
    rng = np.random.default_rng(25)
    shapes = [(star_polygon(rng, n=120), rng.uniform(-0.1, 0.1, 2)) for _ in range(3)]
    shapes += [u_shape(rng) for _ in range(2)]
    for x, c in shapes:
        vis = visibility_polygon(x, c)
        s_len = np.arange(len(x)) / len(x)
        f = np.cos(2 * np.pi * s_len) + 0.5 * np.sin(6 * np.pi * s_len) + 1.2
        ref_s, ref_v = _dense_theta(x, c, vis, f)
        assert q.integrate_nodal_over_theta(x, c, vis, f) == pytest.approx(ref_s, rel=1e-6)
        assert np.linalg.norm(q.integrate_weighted_r_eperp(x, c, vis, f) - ref_v) < 1e-6 * max(1, np.linalg.norm(ref_v))
        ones = np.ones(len(x))
        assert q.integrate_nodal_over_theta(x, c, vis, ones) == pytest.approx(vis.visible_angle_measure, rel=1e-12)
        seg, _ = q.polar_segments(x, c, vis)
        assert np.allclose(q.integrate_weighted_r_eperp(x, c, vis, ones), q.integral_r_eperp(seg), atol=1e-10)


def test_indicator_of_one_arc():
    x = regular_polygon(12)
    vis = visibility_polygon(x, [0.1, 0])
    k = 3
    w = q.nodal_weights(x, [0.1, 0], vis)
    i = vis.segment[k]
    # only the arc of segment i contributes for the hat pair restricted to it
    seg, s = q.polar_segments(x, [0.1, 0], vis)
    i0 = q.rational_segment_integral(seg.c0[k], seg.c1[k], seg.c2[k], 0, seg.lam_a[k], seg.lam_b[k])
    assert seg.jacobian_numerator[k] * i0 == pytest.approx(vis.theta_b[k] - vis.theta_a[k], rel=1e-12)
    assert w.theta.sum() == pytest.approx(2 * np.pi)
    assert i == s[k]


def test_vector_valued_nodal_dot():
    rng = np.random.default_rng(26)
    x = star_polygon(rng, n=90)
    c = np.zeros(2)
    vis = visibility_polygon(x, c)
    vel = rng.standard_normal((90, 2))
    w = q.nodal_weights(x, c, vis)
    a = q.integrate_weighted_r_eperp(x, c, vis, vel)
    b = q.integrate_weighted_r_eperp(x, c, vis, vel[:, 0])[0] + q.integrate_weighted_r_eperp(x, c, vis, vel[:, 1])[1]
    assert a == pytest.approx(b, rel=1e-12)
    assert np.allclose(q.integrate_nodal_over_theta(x, c, vis, vel), w.theta @ vel)
