"""Cortex forces and their Jacobians.

The cortex is a closed Lagrangian polyline ``X_i = X(s_i)`` on the actin-mass
grid ``s_i = i ds``, ``ds = 1/N``. Every force here is a density per unit
``s``; forces derived from an energy ``E`` are ``-(1/ds) grad E``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import ChannelSpec, wall_force, wall_hessian, wall_potential
from .geometry import as_nodes, geodesic_distances_from, polygon_area, area_gradient

E_P = np.array([1.0, 0.0])


class PolymerizationError(ValueError):
    pass


@dataclass(frozen=True)
class CortexMechanics:
    k_c: float
    dp_c: float
    mu_c: float
    A_c: float


def ds_of(x: np.ndarray) -> float:
    return 1.0 / len(x)


def find_front_back(x, e_p=E_P) -> tuple[int, int]:
    """Nodes furthest along and against the polarization (lowest index on ties)."""
    proj = as_nodes(x) @ np.asarray(e_p, dtype=float)
    return int(np.argmax(proj)), int(np.argmin(proj))


def length_elements(x: np.ndarray) -> np.ndarray:
    """``dl_i = |X_{i+1} - X_{i-1}| / 2``."""
    return 0.5 * np.linalg.norm(np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0), axis=1)


@dataclass(frozen=True)
class PolymerizationField:
    f: np.ndarray
    dl: np.ndarray
    front: int
    back: int

    @property
    def produced(self) -> float:
        return float(np.sum(np.maximum(self.f, 0.0) * self.dl))

    @property
    def removed(self) -> float:
        return float(-np.sum(np.minimum(self.f, 0.0) * self.dl))

    @property
    def net(self) -> float:
        return float(np.sum(self.f * self.dl))


def lobe(d: np.ndarray, width: float, power: float) -> np.ndarray:
    return np.exp(-((d * d / (2.0 * width)) ** power))


def polymerization_source(x, r_pol: float, width: float = 0.5, power: float = 3.0, e_p=E_P) -> PolymerizationField:
    """Actin source: a super-Gaussian gain at the front and loss at the back.

    The positive and negative parts are scaled separately so that the produced
    and removed mass per unit time both equal ``r_pol`` exactly.
    """
    x = as_nodes(x)
    dl = length_elements(x)
    front, back = find_front_back(x, e_p)
    if r_pol == 0.0:
        return PolymerizationField(np.zeros(len(x)), dl, front, back)
    g = lobe(geodesic_distances_from(x, front), width, power) - lobe(geodesic_distances_from(x, back), width, power)
    pos = np.maximum(g, 0.0)
    neg = np.maximum(-g, 0.0)
    cp = float(np.sum(pos * dl))
    cn = float(np.sum(neg * dl))
    if not (cp > 0.0 and cn > 0.0):
        raise PolymerizationError("front or back lobe has zero mass")
    f = r_pol * (pos / cp - neg / cn)
    return PolymerizationField(f, dl, front, back)


def cumulative_flux(field: PolymerizationField) -> np.ndarray:
    """``Phi_{i+1/2} = sum_{k<=i} f_k dl_k`` with zero mean (entry ``i``)."""
    phi = np.cumsum(field.f * field.dl)
    return phi - phi.mean()


def transport_and_compensation(x, field: PolymerizationField):
    """Transport term ``F_T`` and the uniform compensation ``F_comp``.

    ``F_T,i = [Phi_{i+1/2}(X_{i+1} - X_i) + Phi_{i-1/2}(X_i - X_{i-1})] / (2 ds)``
    so that ``ds sum_i F_T,i = -sum_i X_i f_i dl_i`` holds exactly, and
    ``F_comp,i = -sum_k X_k f_k dl_k`` for every ``i``.
    """
    x = as_nodes(x)
    ds = ds_of(x)
    phi = cumulative_flux(field)
    fwd = np.roll(x, -1, axis=0) - x
    ft = (phi[:, None] * fwd + np.roll(phi, 1)[:, None] * np.roll(fwd, 1, axis=0)) / (2.0 * ds)
    comp = -np.sum(x * (field.f * field.dl)[:, None], axis=0)
    return ft, np.broadcast_to(comp, x.shape).copy()


def transport_band(x, field: PolymerizationField):
    """Neighbour coefficients of ``d(-F_T)/dX`` per node: ``(lower, diag, upper)``.

    Row ``i`` couples to ``X_{i-1}``, ``X_i`` and ``X_{i+1}`` with these scalar
    factors times the 2x2 identity.
    """
    x = as_nodes(x)
    ds = ds_of(x)
    phi = cumulative_flux(field)
    phim = np.roll(phi, 1)
    return phim / (2 * ds), -(phim - phi) / (2 * ds), -phi / (2 * ds)


def transport_jacobian(x, field: PolymerizationField) -> np.ndarray:
    """``d(-F_T + F_comp)/dX`` with the flux frozen, dense ``(2N, 2N)``."""
    x = as_nodes(x)
    n = len(x)
    lower, diag, upper = transport_band(x, field)
    jac_s = np.zeros((n, n))
    i = np.arange(n)
    jac_s[i, (i - 1) % n] += lower
    jac_s[i, i] += diag
    jac_s[i, (i + 1) % n] += upper
    jac_s -= (field.f * field.dl)[None, :]
    return np.kron(jac_s, np.eye(2))


# -- elastic, area and pressure ------------------------------------------------


def cortex_energy(x, mech: CortexMechanics) -> float:
    """``(k_c/2) sum (l/ds - 1)^2 ds + (mu_c/2)(A - A*)^2 - p A``."""
    x = as_nodes(x)
    ds = ds_of(x)
    seg = np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
    area = polygon_area(x)
    return float(
        0.5 * mech.k_c * np.sum((seg / ds - 1.0) ** 2) * ds
        + 0.5 * mech.mu_c * (area - mech.A_c) ** 2
        - mech.dp_c * area
    )


def elastic_pressure_area_force(x, mech: CortexMechanics) -> np.ndarray:
    x = as_nodes(x)
    ds = ds_of(x)
    e = np.roll(x, -1, axis=0) - x
    seg = np.linalg.norm(e, axis=1)
    tau = e / seg[:, None]
    t = ((seg / ds - 1.0))[:, None] * tau
    elastic = mech.k_c / ds * (t - np.roll(t, 1, axis=0))
    area = polygon_area(x)
    press = (mech.dp_c - mech.mu_c * (area - mech.A_c)) * area_gradient(x) / ds
    return elastic + press


J_ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def elastic_segment_blocks(x, mech: CortexMechanics):
    """Per-segment 2x2 blocks of the elastic Hessian and the area-term scalar.

    Segment ``i`` joins nodes ``i`` and ``i+1`` and contributes ``+h_i`` to both
    diagonal blocks and ``-h_i`` to both off-diagonal ones. The pressure and
    area terms add ``coef/2 J`` to the ``(i, i+1)`` block, ``coef/2 J^T`` to
    ``(i+1, i)`` and the rank-one ``mu_c grad A grad A^T``.
    """
    x = as_nodes(x)
    ds = ds_of(x)
    e = np.roll(x, -1, axis=0) - x
    seg = np.linalg.norm(e, axis=1)
    tau = e / seg[:, None]
    tt = tau[:, :, None] * tau[:, None, :]
    eye = np.eye(2)[None]
    h = mech.k_c * (eye / ds - (eye - tt) / seg[:, None, None])
    coef = mech.mu_c * (polygon_area(x) - mech.A_c) - mech.dp_c
    return h, coef


def energy_hessian(x, mech: CortexMechanics) -> np.ndarray:
    """Hessian of :func:`cortex_energy`, dense ``(2N, 2N)``."""
    x = as_nodes(x)
    n = len(x)
    h, coef = elastic_segment_blocks(x, mech)
    hess = np.zeros((n, 2, n, 2))
    i = np.arange(n)
    j = (i + 1) % n
    hess[i, :, i, :] += h
    hess[j, :, j, :] += h
    hess[i, :, j, :] -= h
    hess[j, :, i, :] -= h
    hess[i, :, j, :] += coef * 0.5 * J_ROT
    hess[j, :, i, :] += coef * 0.5 * J_ROT.T
    ga = area_gradient(x).reshape(-1)
    out = hess.reshape(2 * n, 2 * n)
    out += mech.mu_c * np.outer(ga, ga)
    return out


# -- wall --------------------------------------------------------------------


def wall_energy(x, spec: ChannelSpec) -> float:
    x = as_nodes(x)
    return float(ds_of(x) * np.sum(wall_potential(spec, x)))


def cortex_wall_force(x, spec: ChannelSpec) -> np.ndarray:
    return wall_force(spec, as_nodes(x))


def cortex_wall_jacobian_blocks(x, spec: ChannelSpec) -> np.ndarray:
    return -wall_hessian(spec, as_nodes(x))
