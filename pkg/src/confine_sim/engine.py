"""Split-step time integration of the coupled cell model.

Each step first advances the nucleus with the cortex and centrosome frozen,
then solves one linear system for the cortex displacement, the centrosome
displacement and the angular velocity of the microtubule aster. The system
is a backward Euler step with every force linearized about the current state
(``I + dt k_tau W - dt J``), where ``W`` couples the bodies through
microtubule friction.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import MatrixRankWarning, splu

from .centrosome import (
    CentrosomeState,
    DegenerateStructureError,
    MtForceLaw,
    degeneracy_threshold,
    friction_geometry,
    mt_forces,
)
from .contact import ContactKernel, close_pairs, cortex_contact_force, cortex_contact_jacobian
from .cortex import (
    CortexMechanics,
    PolymerizationError,
    cortex_wall_force,
    cortex_wall_jacobian_blocks,
    J_ROT,
    elastic_pressure_area_force,
    elastic_segment_blocks,
    polymerization_source,
    transport_and_compensation,
    transport_band,
)
from .environment import (
    ChannelSpec,
    WallPenetrationError,
    initial_cortex,
    initial_nucleus,
    wall_profile,
)
from .geometry import (
    ClosedCurve,
    DegenerateCurveError,
    area_gradient,
    length_weighted_centroid,
    points_inside,
    polygon_area,
)
from .nucleus import Environment, NucleusState, NucleusStepError, nucleus_step
from .params import ModelParams
from .visibility import VisibilityError, visibility_polygon

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12
COMPENSATION_TOL = 1e-14
# contact energy is a plain sum over (nucleus node, cortex segment) pairs
CONTACT_WEIGHT = 1.0


class StepRejected(RuntimeError):
    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


class SimulationAborted(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass
class SimulationState:
    cortex: np.ndarray
    nucleus: NucleusState
    centrosome: CentrosomeState
    t: float = 0.0
    dt: float = 2e-4
    step_count: int = 0

    def copy(self) -> "SimulationState":
        return SimulationState(
            self.cortex.copy(), self.nucleus.copy(), self.centrosome.copy(), self.t, self.dt, self.step_count
        )


@dataclass(frozen=True)
class Snapshot:
    step: int
    t: float
    dt: float
    cortex: np.ndarray
    nucleus: np.ndarray
    centrosome: np.ndarray
    omega: float
    tip_x: float
    cortex_centroid: np.ndarray
    cortex_area: float
    nucleus_area: float

    @classmethod
    def of(cls, s: SimulationState) -> "Snapshot":
        x = s.cortex
        return cls(
            step=s.step_count,
            t=s.t,
            dt=s.dt,
            cortex=x.copy(),
            nucleus=s.nucleus.y.copy(),
            centrosome=np.array(s.centrosome.x, dtype=float),
            omega=float(s.centrosome.omega),
            tip_x=float(x[:, 0].max()),
            cortex_centroid=area_centroid(x),
            cortex_area=polygon_area(x),
            nucleus_area=polygon_area(s.nucleus.y),
        )


@dataclass
class Diagnostics:
    """Worst invariant residuals seen over a run (relative)."""

    normalization: float = 0.0
    net_source: float = 0.0
    compensation: float = 0.0
    transport_balance: float = 0.0
    rejected_steps: int = 0
    containment_checks: int = 0

    def update(self, **kw):
        for k, v in kw.items():
            setattr(self, k, max(getattr(self, k), v))


@dataclass
class Trajectory:
    params: ModelParams
    snapshots: list[Snapshot] = field(default_factory=list)
    status: str = "running"
    message: str = ""
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    final: Snapshot | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def tip(self) -> np.ndarray:
        return np.array([s.tip_x for s in self.snapshots])


def area_centroid(x: np.ndarray) -> np.ndarray:
    nxt = np.roll(x, -1, axis=0)
    cr = x[:, 0] * nxt[:, 1] - nxt[:, 0] * x[:, 1]
    a = 0.5 * cr.sum()
    return np.array([np.sum((x[:, 0] + nxt[:, 0]) * cr), np.sum((x[:, 1] + nxt[:, 1]) * cr)]) / (6.0 * a)


class Model:
    """Parameters resolved into the objects the step needs."""

    def __init__(self, params: ModelParams):
        self.params = params
        c, n = params.cortex, params.nucleus
        self.spec: ChannelSpec = params.channel.spec()
        self.mech = CortexMechanics(k_c=c.k_c, dp_c=c.dp_c, mu_c=c.mu_c, A_c=c.A_c)
        self.kernel = ContactKernel(k=n.k_cont, xi=n.xi_cont)
        self.law = MtForceLaw(params.centrosome.mt_law, params.centrosome.k_mt, params.centrosome.mt_rest_length)

    def initial_state(self) -> SimulationState:
        p = self.params
        cortex = initial_cortex(self.spec, p.cortex.A_c, p.numerics.N_c)
        nuc = initial_nucleus(
            self.spec,
            cortex,
            p.numerics.N_n,
            contact_range=self.kernel.cutoff,
            target_area=p.nucleus.A_n,
            x_center=p.nucleus.x0_wavelengths * self.spec.wavelength,
        )
        return SimulationState(
            cortex=np.array(cortex.nodes),
            nucleus=NucleusState.from_curve(nuc.curve.nodes),
            centrosome=CentrosomeState(nuc.center.copy(), 0.0),
            t=0.0,
            dt=p.numerics.dt,
        )


@dataclass(frozen=True)
class StepReport:
    normalization: float
    net_source: float
    compensation: float
    transport_balance: float


def cortex_forces(model: Model, x: np.ndarray, y: np.ndarray, pairs=None):
    """All cortex force densities except microtubule friction, plus bookkeeping."""
    prm = model.params
    field_ = polymerization_source(x, prm.cortex.r_pol, prm.cortex.pol_width, prm.cortex.pol_power)
    ft, comp = transport_and_compensation(x, field_)
    fc = elastic_pressure_area_force(x, model.mech)
    fw = cortex_wall_force(x, model.spec)
    fk = cortex_contact_force(model.kernel, x, y, CONTACT_WEIGHT, pairs)
    return field_, ft, comp, fc + fw + fk - ft + comp


def _check_source(field_, ft, comp, x, r_pol: float) -> StepReport:
    ds = 1.0 / len(x)
    scale_src = max(r_pol, 1e-300)
    norm = max(abs(field_.produced - r_pol), abs(field_.removed - r_pol)) / scale_src if r_pol else 0.0
    net = abs(field_.net) / scale_src if r_pol else float(np.max(np.abs(field_.f)))
    moment = -np.sum(x * (field_.f * field_.dl)[:, None], axis=0)
    scale = float(np.sum(np.linalg.norm(x, axis=1) * np.abs(field_.f) * field_.dl)) or 1.0
    compensation = float(np.max(np.abs(ds * comp.sum(axis=0) - moment))) / scale
    transport = float(np.max(np.abs(ds * ft.sum(axis=0) - moment))) / scale
    return StepReport(norm, net, compensation, transport)


@dataclass(frozen=True)
class Linearization:
    """Everything the implicit cortex/centrosome solve needs at one state."""

    x: np.ndarray
    field: object
    g: np.ndarray  # cortex force densities, friction excluded
    f_int: np.ndarray  # forces on the centrosome
    geom: object  # FrictionGeometry
    local: np.ndarray  # (N, 2, 2) node-diagonal wall Jacobian blocks
    contact: tuple  # (rows, cols, blocks) of the contact Jacobian
    l_n: float


def _block_coo(rows, cols, blocks):
    r = (2 * rows[:, None, None] + np.arange(2)[None, :, None]) + np.zeros((1, 1, 2), dtype=int)
    c = (2 * cols[:, None, None] + np.arange(2)[None, None, :]) + np.zeros((1, 2, 1), dtype=int)
    return r.ravel(), c.ravel(), np.asarray(blocks, dtype=float).ravel()


def system_matrix(lin: Linearization, model: Model, dt: float, dense: bool = False):
    """Matrix of the implicit step in the unknowns ``(dX, dX_c, omega)``.

    The sparse form appends three auxiliary unknowns, ``a = grad A . dX`` and
    ``b = sum_k f_k dl_k dX_k``, which carry the two global couplings of the
    Jacobian (area constraint and compensation) without filling the matrix.
    ``dense=True`` returns the equivalent dense matrix without the borders.
    """
    prm = model.params
    x = lin.x
    n = len(x)
    ds = 1.0 / n
    k_tau = prm.cortex.k_tau
    k_e = prm.centrosome.k_e
    geom = lin.geom
    h, coef = elastic_segment_blocks(x, model.mech)
    lower, diag_t, upper = transport_band(x, lin.field)
    i = np.arange(n)
    j = (i + 1) % n
    eye = np.eye(2)[None]
    jr = 0.5 * coef * J_ROT
    # Jacobian blocks of the banded part (energy forces carry -1/ds)
    kr, kc, kb = lin.contact
    rows = np.concatenate([i, j, i, j, i, i, i, kr])
    cols = np.concatenate([i, j, j, i, (i - 1) % n, i, j, kc])
    blocks = np.concatenate(
        [
            -h / ds + lin.local,
            -h / ds,
            (h - jr[None]) / ds,
            (h - jr.T[None]) / ds,
            lower[:, None, None] * eye,
            diag_t[:, None, None] * eye,
            upper[:, None, None] * eye,
            kb.reshape(-1, 2, 2),
        ]
    )
    r, c, v = _block_coo(rows, cols, blocks)
    v = -dt * v
    fr = k_tau / ds * geom.w
    nn = 2 * n
    XC, OM, AA, BB = nn, nn + 2, nn + 3, nn + 4
    dof = np.arange(nn)
    ga = area_gradient(x).reshape(-1)
    fdl = lin.field.f * lin.field.dl
    parts_r = [r, dof, dof, dof]
    parts_c = [c, dof, XC + dof % 2, np.full(nn, OM)]
    parts_v = [v, 1.0 + np.repeat(fr, 2), -np.repeat(fr, 2), -dt * k_tau / ds * geom.u.reshape(-1)]
    # centrosome force balance (scaled by dt / k_tau)
    for a in range(2):
        parts_r += [np.array([XC + a, XC + a]), np.full(n, XC + a)]
        parts_c += [np.array([XC + a, OM]), 2 * i + a]
        parts_v += [np.array([geom.theta + dt * lin.l_n * k_e / k_tau, dt * geom.c[a]]), -geom.w]
    # torque balance (scaled by dt)
    parts_r += [np.full(3, OM), np.full(nn, OM)]
    parts_c += [np.array([OM, XC, XC + 1]), dof]
    parts_v += [np.array([dt * geom.d, geom.c[0], geom.c[1]]), -geom.u.reshape(-1)]
    if dense:
        size = nn + 3
        m = np.zeros((size, size))
        np.add.at(m, (np.concatenate(parts_r), np.concatenate(parts_c)), np.concatenate(parts_v))
        m[:nn, :nn] += dt * prm.cortex.mu_c / ds * np.outer(ga, ga)
        m[:nn, :nn] += dt * np.kron(np.ones((n, 1)) * fdl[None, :], np.eye(2))
        return m
    # global couplings through the border unknowns
    parts_r += [dof, dof, np.array([AA]), np.full(nn, AA), BB + np.arange(2), BB + dof % 2]
    parts_c += [np.full(nn, AA), BB + dof % 2, np.array([AA]), dof, BB + np.arange(2), dof]
    parts_v += [
        dt * prm.cortex.mu_c / ds * ga,
        np.full(nn, dt),
        np.ones(1),
        -ga,
        np.ones(2),
        -np.repeat(fdl, 2),
    ]
    size = nn + 6
    return csc_matrix(
        (np.concatenate(parts_v), (np.concatenate(parts_r), np.concatenate(parts_c))), shape=(size, size)
    )


def system_rhs(lin: Linearization, model: Model, dt: float, dense: bool = False) -> np.ndarray:
    n = len(lin.x)
    rhs = np.zeros(2 * n + (3 if dense else 6))
    rhs[: 2 * n] = dt * lin.g.reshape(-1)
    rhs[2 * n : 2 * n + 2] = dt * lin.f_int / model.params.cortex.k_tau
    return rhs


def solve_linearized(lin: Linearization, model: Model, dt: float) -> np.ndarray:
    """Solve for ``(dX, dX_c, omega)`` and return them as one flat vector."""
    n = len(lin.x)
    m = system_matrix(lin, model, dt)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            sol = splu(m).solve(system_rhs(lin, model, dt))
    except (RuntimeError, MatrixRankWarning) as exc:
        raise StepRejected(f"singular cortex system: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise StepRejected("non-finite cortex update")
    return sol[: 2 * n + 3]


def linearize(model: Model, x: np.ndarray, xc: np.ndarray, y: np.ndarray) -> tuple[Linearization, StepReport]:
    """Forces and Jacobian pieces of the cortex/centrosome problem at a frozen nucleus ``y``."""
    prm = model.params
    vis = visibility_polygon(x, xc)
    geom = friction_geometry(x, xc, vis)
    if geom.theta * geom.delta <= degeneracy_threshold(x, xc):
        raise StepRejected("degenerate MT structure")
    pairs = close_pairs(y, x, model.kernel.cutoff)
    field_, ft, comp, g = cortex_forces(model, x, y, pairs)
    report = _check_source(field_, ft, comp, x, prm.cortex.r_pol)
    mt_cortex, mt_center = mt_forces(x, xc, vis, model.law)
    ybar, l_n = length_weighted_centroid(y)
    lin = Linearization(
        x=x,
        field=field_,
        g=g + mt_cortex,
        f_int=-l_n * prm.centrosome.k_e * (xc - ybar) + mt_center,
        geom=geom,
        local=cortex_wall_jacobian_blocks(x, model.spec),
        contact=cortex_contact_jacobian(model.kernel, x, y, CONTACT_WEIGHT, pairs),
        l_n=l_n,
    )
    return lin, report


def step(model: Model, state: SimulationState, dt: float) -> tuple[SimulationState, StepReport]:
    """One split step of length ``dt``; raises :class:`StepRejected` on failure."""
    try:
        return _step(model, state, dt)
    except StepRejected:
        raise
    except (
        NucleusStepError,
        VisibilityError,
        DegenerateStructureError,
        WallPenetrationError,
        DegenerateCurveError,
        PolymerizationError,
        LinAlgError,
        FloatingPointError,
        ValueError,
    ) as exc:
        raise StepRejected(f"{type(exc).__name__}: {exc}") from None


def _step(model: Model, state: SimulationState, dt: float):
    prm = model.params
    x = state.cortex
    n = len(x)
    xc = np.asarray(state.centrosome.x, dtype=float)
    k_e = prm.centrosome.k_e

    # (1) nucleus with cortex and centrosome frozen
    env = Environment(cortex=x, centrosome=xc, k_e=k_e, ds=CONTACT_WEIGHT, kernel=model.kernel)
    nuc, _ = nucleus_step(state.nucleus, prm.nucleus, env, dt)
    y = nuc.y

    # (2) cortex + centrosome
    lin, report = linearize(model, x, xc, y)
    sol = solve_linearized(lin, model, dt)
    dx = sol[: 2 * n].reshape(n, 2)
    dxc = sol[2 * n : 2 * n + 2]
    omega = float(sol[2 * n + 2])

    # acceptance checks
    seg = np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
    cap = prm.numerics.max_displacement
    if np.max(np.linalg.norm(dx, axis=1)) > cap * seg.min():
        raise StepRejected("cortex displacement cap exceeded")
    y_old = state.nucleus.y
    seg_n = np.linalg.norm(np.roll(y_old, -1, axis=0) - y_old, axis=1)
    if np.max(np.linalg.norm(y - y_old, axis=1)) > cap * seg_n.min():
        raise StepRejected("nucleus displacement cap exceeded")
    x_new = x + dx
    xc_new = xc + dxc
    clearance = wall_profile(model.spec, x_new[:, 0]) - np.abs(x_new[:, 1])
    if not np.all(clearance > 0.0):
        raise StepRejected("cortex penetrated the channel wall")
    curve = ClosedCurve(x_new)
    if curve.was_reversed:
        raise StepRejected("cortex orientation flipped")
    inside = points_inside(x_new, np.vstack([y, xc_new[None, :]]))
    if not np.all(inside):
        raise StepRejected("nucleus or centrosome left the cortex")
    new = SimulationState(
        cortex=x_new,
        nucleus=nuc,
        centrosome=CentrosomeState(xc_new, omega),
        t=state.t + dt,
        dt=state.dt,
        step_count=state.step_count + 1,
    )
    return new, report


def run(
    params: ModelParams,
    t_end: float | None = None,
    snapshot_stride: int | None = None,
    state: SimulationState | None = None,
    max_steps: int | None = None,
) -> Trajectory:
    """Integrate to ``t_end`` with adaptive time steps and record snapshots."""
    model = Model(params)
    num = params.numerics
    t_end = num.t_end if t_end is None else float(t_end)
    stride = num.snapshot_stride if snapshot_stride is None else int(snapshot_stride)
    traj = Trajectory(params=params)
    s = model.initial_state() if state is None else state
    dt = s.dt
    traj.snapshots.append(Snapshot.of(s))
    streak = 0
    diag = traj.diagnostics
    while s.t < t_end * (1.0 - 1e-14):
        if max_steps is not None and s.step_count >= max_steps:
            break
        h = min(dt, t_end - s.t)
        try:
            new, rep = step(model, s, h)
        except StepRejected as exc:
            diag.rejected_steps += 1
            dt = 0.5 * h
            streak = 0
            log.debug("t=%.6g step rejected (%s); dt -> %.3g", s.t, exc.cause, dt)
            if dt < num.dt_min:
                traj.status = "aborted"
                traj.message = f"time step underflow at t={s.t:.6g}: {exc.cause}"
                traj.final = Snapshot.of(s)
                return traj
            continue
        diag.update(
            normalization=rep.normalization,
            net_source=rep.net_source,
            compensation=rep.compensation,
            transport_balance=rep.transport_balance,
        )
        diag.containment_checks += 1
        if rep.normalization > NORMALIZATION_TOL or rep.net_source > NORMALIZATION_TOL:
            raise InvariantViolation(f"polymerization normalization off by {rep.normalization:.3e}")
        if rep.compensation > COMPENSATION_TOL:
            raise InvariantViolation(f"compensation balance off by {rep.compensation:.3e}")
        new.dt = h
        s = new
        streak += 1
        if streak >= num.grow_after:
            dt = min(dt * num.grow_factor, num.dt_max)
            streak = 0
        if s.step_count % stride == 0:
            traj.snapshots.append(Snapshot.of(s))
    if traj.snapshots[-1].step != s.step_count:
        traj.snapshots.append(Snapshot.of(s))
    traj.status = "completed"
    traj.final = traj.snapshots[-1]
    return traj


def is_finite_state(s: SimulationState) -> bool:
    return bool(
        np.all(np.isfinite(s.cortex)) and np.all(np.isfinite(s.nucleus.y)) and math.isfinite(s.centrosome.omega)
    )
