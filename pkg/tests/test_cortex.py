import numpy as np
import pytest

from confine_sim.cortex import (
    CortexMechanics,
    PolymerizationError,
    cortex_energy,
    cumulative_flux,
    elastic_pressure_area_force,
    energy_hessian,
    find_front_back,
    polymerization_source,
    transport_and_compensation,
    transport_band,
    transport_jacobian,
)
from shapes import regular_polygon, star_polygon

MECH = CortexMechanics(k_c=0.3, dp_c=2.56, mu_c=50.0, A_c=1.8)


def _blob(seed=0, n=60):
    rng = np.random.default_rng(seed)
    return star_polygon(rng, n, center=(0.3, -0.2), noise=0.005) * 0.8


def _fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        for a in range(2):
            xp, xm = x.copy(), x.copy()
            xp[i, a] += h
            xm[i, a] -= h
            g[i, a] = (fun(xp) - fun(xm)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_force_is_energy_gradient_per_unit_s(seed):
    x = _blob(seed)
    f = elastic_pressure_area_force(x, MECH)
    g = _fd_grad(lambda xx: cortex_energy(xx, MECH), x)
    ds = 1.0 / len(x)
    assert np.max(np.abs(f + g / ds)) <= 1e-6 * np.abs(f).max()


def test_hessian_matches_fd_of_force():
    x = _blob(4, 40)
    ds = 1.0 / len(x)
    hess = energy_hessian(x, MECH)
    fd = np.zeros_like(hess)
    h = 1e-6
    for i in range(len(x)):
        for a in range(2):
            xp, xm = x.copy(), x.copy()
            xp[i, a] += h
            xm[i, a] -= h
            fd[:, 2 * i + a] = -ds * (elastic_pressure_area_force(xp, MECH) - elastic_pressure_area_force(xm, MECH)).ravel() / (2 * h)
    assert np.max(np.abs(hess - fd)) <= 1e-6 * np.abs(hess).max()
    np.testing.assert_allclose(hess, hess.T, atol=1e-9 * np.abs(hess).max())


def test_pressure_points_outward_on_circle():
    x = regular_polygon(100, 0.5)
    mech = CortexMechanics(k_c=0.0, dp_c=1.0, mu_c=0.0, A_c=0.0)
    f = elastic_pressure_area_force(x, mech)
    radial = np.einsum("ij,ij->i", f, x) / np.linalg.norm(x, axis=1)
    assert np.all(radial > 0)
    assert np.allclose(np.linalg.norm(f - radial[:, None] * x / 0.5, axis=1), 0.0, atol=1e-12)


def test_front_back():
    x = regular_polygon(40, 1.0, center=(2.0, 1.0))
    assert find_front_back(x) == (0, 20)


@pytest.mark.parametrize("seed", range(5))
def test_polymerization_identities(seed):
    x = _blob(seed, 250)
    field = polymerization_source(x, 10.0)
    assert abs(field.produced - 10.0) <= 1e-12 * 10
    assert abs(field.removed - 10.0) <= 1e-12 * 10
    assert abs(field.net) <= 1e-12 * 10
    assert field.f[field.front] > 0 > field.f[field.back]


def test_zero_rate():
    assert np.all(polymerization_source(_blob(0), 0.0).f == 0)


def test_overlapping_lobes_cancel_to_nothing():
    # front and back coincide on a single repeated point set, so nothing is left to normalize
    x = np.array([[0.0, 0.0], [0.0, 1e-9], [-1e-9, 0.0]])
    with pytest.raises(PolymerizationError):
        polymerization_source(x, 1.0, width=1e6)


def test_transport_balance_is_exact():
    x = _blob(3, 250)
    field = polymerization_source(x, 10.0)
    ft, comp = transport_and_compensation(x, field)
    ds = 1.0 / len(x)
    moment = -np.sum(x * (field.f * field.dl)[:, None], axis=0)
    scale = np.sum(np.linalg.norm(x, axis=1) * np.abs(field.f) * field.dl)
    assert np.max(np.abs(ds * ft.sum(axis=0) - moment)) <= 1e-13 * scale
    assert np.max(np.abs(ds * comp.sum(axis=0) - moment)) <= 1e-14 * scale


def test_flux_gauge_zero_mean():
    field = polymerization_source(_blob(1), 10.0)
    phi = cumulative_flux(field)
    assert abs(phi.mean()) < 1e-12
    # increments reproduce the source
    np.testing.assert_allclose(np.diff(phi), (field.f * field.dl)[1:], atol=1e-12)


def test_transport_jacobian_with_frozen_flux():
    x = _blob(2, 30)
    field = polymerization_source(x, 10.0)

    def rhs(xx):
        ft, comp = transport_and_compensation(xx, field)
        return (-ft + comp).ravel()

    jac = transport_jacobian(x, field)
    h = 1e-6
    fd = np.zeros_like(jac)
    for k in range(2 * len(x)):
        xp, xm = x.ravel().copy(), x.ravel().copy()
        xp[k] += h
        xm[k] -= h
        fd[:, k] = (rhs(xp.reshape(-1, 2)) - rhs(xm.reshape(-1, 2))) / (2 * h)
    assert np.max(np.abs(jac - fd)) <= 1e-7 * np.abs(jac).max()
    lower, diag, upper = transport_band(x, field)
    # a rigid translation is only resisted by the compensation part
    np.testing.assert_allclose(lower + diag + upper, 0.0, atol=1e-12 * np.abs(diag).max())
