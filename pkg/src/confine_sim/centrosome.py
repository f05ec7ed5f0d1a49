"""Rigid microtubule aster: in-line forces, nucleus link and friction balance.

All angular integrals run over the visible arcs only. Cortex data enter
through the nodal quadrature weights of a piecewise linear interpolation
between nodes: ``w_i`` (plain theta measure) and ``u_i`` (weights of
``|X_theta - X_c| e_theta^perp``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_nodes, length_weighted_centroid
from .mtquad import integral_r2, nodal_weights, polar_segments, theta_gauss_points
from .visibility import VisibilityResult


class DegenerateStructureError(ArithmeticError):
    """The friction system of the microtubule structure is singular."""


@dataclass
class CentrosomeState:
    x: np.ndarray
    omega: float = 0.0

    def copy(self) -> "CentrosomeState":
        return CentrosomeState(np.array(self.x, dtype=float), float(self.omega))


@dataclass(frozen=True)
class MtForceLaw:
    kind: str = "zero"
    k_mt: float = 0.0
    rest_length: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "linear"):
            raise ValueError(f"unknown microtubule force law '{self.kind}'")

    @property
    def active(self) -> bool:
        return self.kind == "linear" and self.k_mt != 0.0

    def intensity(self, length):
        length = np.asarray(length, dtype=float)
        if not self.active:
            return np.zeros_like(length)
        return self.k_mt * (length - self.rest_length)


def mt_inline_force(law: MtForceLaw, center, anchor) -> np.ndarray:
    """Force on the cortex point ``anchor`` from the microtubule rooted at ``center``.

    ``-f(L) e_theta`` with ``e_theta`` pointing from the centre to the anchor.
    """
    c = np.asarray(center, dtype=float)
    a = np.atleast_2d(np.asarray(anchor, dtype=float))
    d = a - c
    length = np.linalg.norm(d, axis=1)
    if np.any(length == 0.0):
        raise ValueError("microtubule anchor coincides with the centrosome")
    out = -law.intensity(length)[:, None] * d / length[:, None]
    return out[0] if np.ndim(anchor) == 1 else out


def centrosome_nucleus_resultant(nucleus, x_c, k_e: float) -> np.ndarray:
    """``-L_n k_e (X_c - Ybar)``."""
    ybar, length = length_weighted_centroid(nucleus)
    return -length * k_e * (np.asarray(x_c, dtype=float) - ybar)


@dataclass(frozen=True)
class FrictionGeometry:
    """Angular moments of the visible cortex seen from the centrosome."""

    w: np.ndarray  # (N,) theta weights
    u: np.ndarray  # (N, 2) r e_perp weights
    theta: float  # visible measure, sum of w
    c: np.ndarray  # int r e_perp dtheta
    d: float  # int r^2 dtheta

    @property
    def delta(self) -> float:
        return float(self.theta * self.d - self.c @ self.c)


def friction_geometry(curve, center, vis: VisibilityResult) -> FrictionGeometry:
    x = as_nodes(curve)
    nw = nodal_weights(x, center, vis)
    seg, _ = polar_segments(x, center, vis)
    return FrictionGeometry(
        w=nw.theta,
        u=nw.r_eperp,
        theta=float(nw.theta.sum()),
        c=nw.r_eperp.sum(axis=0),
        d=integral_r2(seg),
    )


def mt_forces(curve, center, vis: VisibilityResult, law: MtForceLaw, order: int = 8):
    """In-line microtubule forces: nodal cortex densities and centrosome resultant.

    The cortex density at node ``i`` is ``(1/ds) int phi_i(theta) F_MT dtheta``
    with ``phi_i`` the hat function; the centrosome receives the opposite resultant.
    """
    x = as_nodes(curve)
    n = len(x)
    if not law.active:
        return np.zeros((n, 2)), np.zeros(2)
    theta, weight, s, lam = theta_gauss_points(x, center, vis, order)
    c = np.asarray(center, dtype=float)
    p = x[s] + lam[:, None] * (x[(s + 1) % n] - x[s])
    length = np.linalg.norm(p - c, axis=1)
    e = np.column_stack([np.cos(theta), np.sin(theta)])
    f = -law.intensity(length)[:, None] * e * weight[:, None]
    nodal = np.zeros((n, 2))
    np.add.at(nodal, s, (1.0 - lam)[:, None] * f)
    np.add.at(nodal, (s + 1) % n, lam[:, None] * f)
    return nodal * n, -f.sum(axis=0)


def build_friction_system(geom: FrictionGeometry, velocities, f_int, k_tau: float):
    """3x3 friction matrix ``A`` and right-hand side ``B`` for ``(dX_c/dt, omega)``."""
    v = np.asarray(velocities, dtype=float)
    A = np.zeros((3, 3))
    A[0, 0] = A[1, 1] = geom.theta
    A[:2, 2] = A[2, :2] = geom.c
    A[2, 2] = geom.d
    A *= k_tau
    B = np.empty(3)
    B[:2] = k_tau * (geom.w @ v) + np.asarray(f_int, dtype=float)
    B[2] = k_tau * float(np.einsum("ij,ij->", geom.u, v))
    return A, B


def degeneracy_threshold(curve, center, k_tau: float = 1.0) -> float:
    """Scale-aware lower bound for ``det A``."""
    r2 = np.sum((as_nodes(curve) - np.asarray(center, float)) ** 2, axis=1)
    return 1e-12 * 2.0 * np.pi * k_tau**3 * float(np.mean(r2))


def solve_centrosome(A: np.ndarray, B: np.ndarray, eps: float = 0.0):
    """Closed-form solution of the friction balance; returns ``(velocity, omega)``.

    Raises :class:`DegenerateStructureError` when ``det A <= eps``.
    """
    theta = A[0, 0]
    c = A[:2, 2]
    d = A[2, 2]
    delta = theta * d - c @ c
    if not (theta > 0 and theta * delta > eps):
        raise DegenerateStructureError("degenerate MT structure")
    omega = (theta * B[2] - c @ B[:2]) / delta
    vel = (B[:2] - omega * c) / theta
    return vel, float(omega)
