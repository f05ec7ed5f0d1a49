"""Nuclear membrane evolution in curvature / tangent-angle / local-length form.

Discretization conventions (all indices cyclic, ``N`` nodes):

* element ``i`` is ``[Y_{i-1}, Y_i]`` with length ``r_i``; ``K_i``, ``nu_i``,
  ``eta_i = log r_i`` and ``beta_i`` live on elements;
* node ``i`` carries the tangential velocity ``alpha_i``, the potential ``W_i``
  and the dual length ``q_i = (r_i + r_{i+1}) / 2``;
* ``T_i = (cos nu_i, sin nu_i)`` and the outward normal ``N_i = (sin nu_i, -cos nu_i)``.

The tangent angle is stored unwrapped: ``nu_{i+N} = nu_i + 2 pi``.

One step solves, in order, the lengths (explicit), ``K`` and ``nu``
(cyclic pentadiagonal, semi-implicit) and the node positions (cyclic
pentadiagonal, shared matrix for both coordinates).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .contact import ContactKernel, close_pairs, nucleus_contact_potential
from .geometry import polygon_area
from .params import NucleusParams
from .pentadiag import IllConditionedSystemError, cyclic_pentadiagonal_solve

TWO_PI = 2.0 * np.pi
ETA_LIMIT = 30.0


class NucleusStepError(ArithmeticError):
    """The nucleus update produced an unusable state."""


def sh(a: np.ndarray, k: int) -> np.ndarray:
    """``sh(a, k)[i] == a[(i + k) % N]``."""
    return np.roll(a, -k, axis=0)


def element_geometry(y: np.ndarray, nu_ref: float | None = None):
    """Element lengths and unwrapped tangent angles of the polygon ``y``."""
    e = y - sh(y, -1)
    r = np.linalg.norm(e, axis=1)
    if np.any(~(r > 0.0)):
        raise NucleusStepError("zero-length nuclear element")
    raw = np.arctan2(e[:, 1], e[:, 0])
    turn = np.angle(np.exp(1j * (raw[1:] - raw[:-1])))
    nu = raw[0] + np.concatenate(([0.0], np.cumsum(turn)))
    if nu_ref is not None:
        nu += TWO_PI * np.round((nu_ref - nu[0]) / TWO_PI)
    return r, nu


def ext_nu(nu: np.ndarray, k: int) -> np.ndarray:
    """Shifted unwrapped angles: ``nu_{i+k}`` including the 2 pi jumps."""
    n = len(nu)
    idx = np.arange(n) + k
    return nu[idx % n] + TWO_PI * np.floor_divide(idx, n)


def curvature_from_angles(nu: np.ndarray, r: np.ndarray) -> np.ndarray:
    q = 0.5 * (r + sh(r, 1))
    fwd = (ext_nu(nu, 1) - nu) / q
    bwd = (nu - ext_nu(nu, -1)) / sh(q, -1)
    return 0.5 * (fwd + bwd)


def normals(nu: np.ndarray) -> np.ndarray:
    return np.column_stack([np.sin(nu), -np.cos(nu)])


@dataclass
class NucleusState:
    y: np.ndarray
    K: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    steps: int = 0

    @classmethod
    def from_curve(cls, y) -> "NucleusState":
        y = np.array(y, dtype=float)
        r, nu = element_geometry(y)
        return cls(y=y, K=curvature_from_angles(nu, r), nu=nu, eta=np.log(r))

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.eta)

    @property
    def q(self) -> np.ndarray:
        r = self.r
        return 0.5 * (r + sh(r, 1))

    @property
    def n(self) -> int:
        return len(self.y)

    def copy(self) -> "NucleusState":
        return NucleusState(self.y.copy(), self.K.copy(), self.nu.copy(), self.eta.copy(), self.steps)

    def resynced(self) -> "NucleusState":
        """Recompute lengths, angles and curvature from the node positions."""
        r, nu = element_geometry(self.y, nu_ref=self.nu[0])
        return replace(self, nu=nu, eta=np.log(r), K=curvature_from_angles(nu, r))


@dataclass(frozen=True)
class Environment:
    """What the nucleus sees: cortex nodes, centrosome and coupling constants."""

    cortex: np.ndarray | None = None
    centrosome: np.ndarray | None = None
    k_e: float = 0.0
    ds: float = 0.0
    kernel: ContactKernel | None = field(default=None)


def dual_lengths(y: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(y - sh(y, -1), axis=1)
    return 0.5 * (r + sh(r, 1))


def potential(y: np.ndarray, env: Environment, lam: float = 0.0):
    """Nodal potential ``W`` and gradient ``grad W`` felt by the nucleus."""
    w = np.full(len(y), float(lam))
    g = np.zeros((len(y), 2))
    if env.cortex is not None and env.kernel is not None and len(env.cortex):
        pairs = close_pairs(y, env.cortex, env.kernel.cutoff)
        wc, gc = nucleus_contact_potential(env.kernel, y, env.cortex, env.ds, pairs)
        w += wc
        g += gc
    if env.centrosome is not None and env.k_e:
        d = y - np.asarray(env.centrosome, float)
        w += 0.5 * env.k_e * np.einsum("ij,ij->i", d, d)
        g += env.k_e * d
    return w, g


def normal_velocity(state: NucleusState, prm: NucleusParams, w: np.ndarray, gw: np.ndarray) -> np.ndarray:
    """Elementwise normal velocity ``beta``."""
    K, r, q = state.K, state.r, state.q
    area = polygon_area(state.y)
    lap = ((sh(K, 1) - K) / q - (K - sh(K, -1)) / sh(q, -1)) / r
    w_el = 0.5 * (sh(w, -1) + w)
    g_el = 0.5 * (sh(gw, -1) + gw)
    nrm = normals(state.nu)
    return (
        prm.k_b * lap
        + 0.5 * prm.k_b * K**3
        - prm.dp_n
        - prm.mu_n * (area - prm.A_n)
        - np.einsum("ij,ij->i", nrm, g_el)
        - w_el * K
    )


def tangential_velocity(r: np.ndarray, K: np.ndarray, beta: np.ndarray, zeta: float) -> np.ndarray:
    """Nodal ``alpha`` with ``alpha_0 = 0``."""
    n = len(r)
    L = r.sum()
    B = np.sum(r * K * beta) / L
    inc = r * (-K * beta + B) + (L / n - r) * zeta
    alpha = np.concatenate(([0.0], np.cumsum(inc[1:])))
    return alpha


def _bending_bands(r: np.ndarray, q: np.ndarray, k_b: float):
    """Bands of ``k_b`` times the element fourth-difference operator."""
    qm2, qm1, qp1 = sh(q, -2), sh(q, -1), sh(q, 1)
    rm1, rp1 = sh(r, -1), sh(r, 1)
    a = k_b / (qm2 * rm1 * qm1)
    e = k_b / (q * rp1 * qp1)
    b = -k_b * (1 / (qm1 * r * q) + 1 / (qm1**2 * r) + 1 / (qm1**2 * rm1) + 1 / (qm1 * rm1 * qm2))
    d = -k_b * (1 / (q * rp1 * qp1) + 1 / (q**2 * rp1) + 1 / (q**2 * r) + 1 / (q * r * qm1))
    c = k_b * (1 / (q**2 * rp1) + 1 / (q**2 * r) + 1 / (qm1**2 * r) + 1 / (qm1**2 * rm1) + 2 / (q * r * qm1))
    return a, b, c, d, e


def _solve(a, b, c, d, e, f):
    try:
        return cyclic_pentadiagonal_solve(a, b, c, d, e, f)
    except IllConditionedSystemError as exc:
        raise NucleusStepError(str(exc)) from None


def _solve_curvature(state, r, q, alpha, beta_old, w, gw, dt, k_b):
    K = state.K
    r_old, q_old = state.r, state.q
    nrm = normals(state.nu)
    a, b, c, d, e = _bending_bands(r, q, k_b)
    qm1 = sh(q, -1)
    am1 = sh(alpha, -1)
    b = b + 0.5 * am1 - 0.5 * (sh(w, -1) + sh(w, -2)) / qm1
    d = d - 0.5 * alpha - 0.5 * (sh(w, 1) + w) / q
    c = (
        c
        + r / dt
        + 0.5 * (alpha - am1)
        + r_old * K * beta_old
        + 0.5 * (1 / q + 1 / qm1) * (w + sh(w, -1))
    )
    gsum = gw + sh(gw, -1)  # grad W_i + grad W_{i-1}
    qo, qom1 = q_old, sh(q_old, -1)
    f = (
        r / dt * K
        - k_b * (sh(K, 1) ** 3 - K**3) / (2 * qo)
        + k_b * (K**3 - sh(K, -1) ** 3) / (2 * qom1)
        + np.einsum("ij,ij->i", sh(gsum, 1), sh(nrm, 1)) / (2 * qo)
        - (1 / (2 * qo) + 1 / (2 * qom1)) * np.einsum("ij,ij->i", gsum, nrm)
        + np.einsum("ij,ij->i", sh(gsum, -1), sh(nrm, -1)) / (2 * qom1)
    )
    return _solve(a, b, c, d, e, f)


def _solve_angle(state, r, q, alpha, w, gw, dt, k_b):
    nu = state.nu
    n = len(nu)
    q_old = state.q
    nrm = normals(nu)
    a, b, c, d, e = _bending_bands(r, q, k_b)
    qm1 = sh(q, -1)
    am1 = sh(alpha, -1)
    b = b + 0.5 * am1 - sh(w, -1) / qm1
    d = d - 0.5 * alpha - w / q
    c = c + r / dt + 0.5 * (alpha - am1) + (w / q + sh(w, -1) / qm1)
    fwd = (ext_nu(nu, 1) - nu) / q_old
    bwd = (nu - ext_nu(nu, -1)) / sh(q_old, -1)
    gn = 0.5 * np.einsum("ij,ij->i", gw, sh(nrm, 1) + nrm)  # at node i
    f = r / dt * nu - 0.5 * k_b * fwd**3 + 0.5 * k_b * bwd**3 + gn - sh(gn, -1)
    # wrap-around neighbours carry a 2 pi offset
    idx = np.arange(n)
    for coef, k in ((a, -2), (b, -1), (d, 1), (e, 2)):
        f = f - coef * TWO_PI * np.floor_divide(idx + k, n)
    return _solve(a, b, c, d, e, f)


def _solve_positions(state, r, q, K_new, alpha, w, gw, dt, prm: NucleusParams):
    y = state.y
    r_old = state.r
    nrm = normals(state.nu)
    k_b = prm.k_b
    rm1, rp1, rp2 = sh(r, -1), sh(r, 1), sh(r, 2)
    qm1, qp1 = sh(q, -1), sh(q, 1)
    Kp1 = sh(K_new, 1)
    A = k_b / (rm1 * qm1 * r)
    E = k_b / (rp1 * qp1 * rp2)
    B = (
        -k_b * (1 / (rm1 * qm1 * r) + 1 / (r**2 * qm1) + 1 / (r**2 * q) + 1 / (r * q * rp1))
        + 1.5 * k_b * K_new**2 / r
        + 0.5 * alpha
        - w / r
    )
    D = (
        -k_b * (1 / (r * q * rp1) + 1 / (rp1**2 * q) + 1 / (rp1**2 * qp1) + 1 / (rp1 * qp1 * rp2))
        + 1.5 * k_b * Kp1**2 / rp1
        - 0.5 * alpha
        - w / rp1
    )
    C = q / dt - (A + B + D + E)
    area = polygon_area(y)
    press = prm.dp_n + prm.mu_n * (area - prm.A_n)
    n_next = sh(nrm, 1)
    r_next = sh(r_old, 1)
    F = (
        (q / dt)[:, None] * y
        - 0.5 * press * (r_next[:, None] * n_next + r_old[:, None] * nrm)
        - 0.5
        * (
            (r_next * np.einsum("ij,ij->i", n_next, gw))[:, None] * n_next
            + (r_old * np.einsum("ij,ij->i", nrm, gw))[:, None] * nrm
        )
    )
    return _solve(A, B, C, D, E, F)


@dataclass(frozen=True)
class NucleusStepInfo:
    alpha: np.ndarray
    beta: np.ndarray
    w: np.ndarray
    grad_w: np.ndarray


def nucleus_step(state: NucleusState, prm: NucleusParams, env: Environment, dt: float):
    """Advance the nucleus by one time step; returns ``(new_state, info)``."""
    w, gw = potential(state.y, env, prm.lam)
    beta = normal_velocity(state, prm, w, gw)
    r_old = state.r
    alpha = tangential_velocity(r_old, state.K, beta, prm.zeta)
    eta = state.eta + dt * (state.K * beta + (alpha - sh(alpha, -1)) / r_old)
    if not np.all(np.isfinite(eta)) or np.max(np.abs(eta)) > ETA_LIMIT:
        raise NucleusStepError("local length left the admissible range")
    r = np.exp(eta)
    q = 0.5 * (r + sh(r, 1))
    K_new = _solve_curvature(state, r, q, alpha, beta, w, gw, dt, prm.k_b)
    nu_new = _solve_angle(state, r, q, alpha, w, gw, dt, prm.k_b)
    y_new = _solve_positions(state, r, q, K_new, alpha, w, gw, dt, prm)
    if not (np.all(np.isfinite(K_new)) and np.all(np.isfinite(nu_new)) and np.all(np.isfinite(y_new))):
        raise NucleusStepError("non-finite nucleus update")
    new = NucleusState(y=y_new, K=K_new, nu=nu_new, eta=eta, steps=state.steps + 1)
    if new.steps % prm.resync_every == 0:
        try:
            new = new.resynced()
        except NucleusStepError:
            raise
    return new, NucleusStepInfo(alpha=alpha, beta=beta, w=w, grad_w=gw)


def nucleus_energy(state: NucleusState, prm: NucleusParams, env: Environment) -> float:
    """Bending + pressure + area penalty + potential energy of the nucleus."""
    r = state.r
    area = polygon_area(state.y)
    w, _ = potential(state.y, env, prm.lam)
    return float(
        0.5 * prm.k_b * np.sum(state.K**2 * r)
        + prm.dp_n * area
        + 0.5 * prm.mu_n * (area - prm.A_n) ** 2
        + np.sum(w * dual_lengths(state.y))
    )


def redistribute_frozen(y: np.ndarray, zeta: float, dt: float, steps: int) -> np.ndarray:
    """Tangential redistribution only: nodes slide along the fixed polygon.

    The element lengths follow the scheme's length update with zero normal
    velocity; nodes are then placed on the original polygon at the resulting
    cumulative arc lengths.
    """
    base = np.asarray(y, dtype=float)
    closed = np.vstack([base, base[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = cum[-1]
    # element i = [Y_{i-1}, Y_i]; start from the actual lengths
    r = np.roll(seg, 1)
    zeros = np.zeros_like(r)
    for _ in range(steps):
        alpha = tangential_velocity(r, zeros, zeros, zeta)
        r = r + dt * (alpha - sh(alpha, -1))
    # node 0 stays put (alpha_0 = 0); node i sits at sum_{m=1..i} r_m
    s = np.concatenate(([0.0], np.cumsum(r[1:])))
    s *= total / r.sum()
    xs = np.interp(s, cum, closed[:, 0])
    ys = np.interp(s, cum, closed[:, 1])
    return np.column_stack([xs, ys])


def length_spread(y: np.ndarray) -> float:
    r = np.linalg.norm(y - sh(y, -1), axis=1)
    return float(np.max(np.abs(r * len(r) / r.sum() - 1.0)))


def isoperimetric_ratio(y: np.ndarray) -> float:
    """``L^2 / (4 pi A)``; 1 for a circle."""
    r = np.linalg.norm(y - sh(y, -1), axis=1)
    return float(r.sum() ** 2 / (4 * np.pi * polygon_area(y)))
