"""BDF2 IMEX time stepping with a scalar auxiliary variable.

Each step splits the linear-implicit update into two constant-coefficient
subproblems, one carrying the data (forcing, history, boundary values) and
one driven by the explicit nonlinear terms, then fixes their combination
with a scalar equation for the auxiliary variable ``q``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .forms import Coefficients, load_vector
from .problems import TANGENTIAL, WALL, Problem
from .spaces import interpolate
from .system import (
    ConstraintSet,
    Discretization,
    LinearOperatorCache,
    discretize,
    magnetic_lid,
    magnetic_normal,
    magnetic_tangential,
    solve_magnetic,
    solve_stokes,
    velocity_dirichlet,
)

log = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-9


class SolvabilityError(RuntimeError):
    """The scalar equation lost its positive coefficient."""

    def __init__(self, step, msg):
        super().__init__(f"step {step}: {msg}")
        self.step = step


class NonFiniteError(RuntimeError):
    def __init__(self, step, what):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


@dataclass
class SchemeParams:
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 1.0
    T: float = 1.0
    dt: float | None = None
    N: int | None = None

    def __post_init__(self):
        for name in ("nu", "mu", "sigma", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.N is None and self.dt is None:
            raise ValueError("give N or dt")
        if self.N is None:
            steps = round(self.T / self.dt)
            if steps < 1 or abs(steps * self.dt - self.T) > 1e-12 * max(1.0, self.T):
                raise ValueError(f"dt={self.dt} does not divide T={self.T}")
            self.N = steps - 1
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if self.dt is None:
            self.dt = self.T / (self.N + 1)
        if abs(self.dt * (self.N + 1) - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("dt * (N + 1) must equal T")

    @classmethod
    def from_mesh_size(cls, h: float, T: float = 1.0, **kw) -> "SchemeParams":
        """Time step tied to the mesh size: N + 1 = ceil(T / h)."""
        return cls(T=T, N=math.ceil(T / h - 1e-12) - 1, **kw)

    @property
    def n_steps(self) -> int:
        return self.N + 1

    @property
    def coef(self) -> Coefficients:
        return Coefficients(self.nu, self.mu, self.sigma)


@dataclass
class SavState:
    n: int
    t: float
    u: np.ndarray
    b: np.ndarray
    p: np.ndarray
    q: float
    u_prev: np.ndarray | None = None
    b_prev: np.ndarray | None = None
    q_prev: float | None = None


@dataclass
class EnergyRecord:
    step: int
    t: float
    kinetic: float
    magnetic: float
    q2: float
    diss_u: float
    diss_b: float
    telescoped: float = float("nan")
    dissipated: float = 0.0
    positivity_gap: float = 0.0
    div_max: float = 0.0


@dataclass
class StepDiagnostics:
    positivity_lhs: float
    positivity_rhs: float
    denominator: float
    xi: float
    residual: float | None = None

    @property
    def positivity_gap(self) -> float:
        scale = max(abs(self.positivity_lhs), abs(self.positivity_rhs), 1e-300)
        return abs(self.positivity_lhs - self.positivity_rhs) / scale


def q_exact(t: float, T: float) -> float:
    return math.exp(-t / T)


def extrapolate(v, v_prev):
    return 2.0 * v - v_prev


class Integrator:
    """Holds the discretization, boundary data and cached factorizations of one run."""

    def __init__(self, disc: Discretization, params: SchemeParams, problem: Problem):
        self.disc, self.params, self.problem = disc, params, problem
        self.cache = LinearOperatorCache(disc)
        self._vcons = velocity_dirichlet(disc)
        if problem.magnetic_bc == TANGENTIAL:
            self._bcons = magnetic_tangential(disc)
        elif problem.magnetic_bc == WALL:
            self._bcons = magnetic_lid(disc)
        else:
            self._bcons = magnetic_normal(disc)
        self.step_diagnostics: list[StepDiagnostics] = []
        self.check_residual = False

    # boundary data ---------------------------------------------------------

    def velocity_constraints(self, t: float) -> ConstraintSet:
        g = self.problem.velocity_bc
        if g is None:
            return self._vcons
        return velocity_dirichlet(self.disc, lambda x: g(x, t))

    def magnetic_constraints(self, t: float) -> ConstraintSet:
        return self._bcons

    # data ----------------------------------------------------------------------

    def loads(self, t: float):
        d = self.disc
        fu = (load_vector(self.problem.f, d.vel_groups, d.n_u, t) if self.problem.f is not None
              else np.zeros(d.n_u))
        gb = (load_vector(self.problem.g, d.mag_groups, d.n_b, t) if self.problem.g is not None
              else np.zeros(d.n_b))
        return fu, gb

    def initial_state(self) -> SavState:
        d = self.disc
        u0 = interpolate(self.problem.u0, d.vel, d.mesh, d.vel_proj)
        b0 = interpolate(self.problem.b0, d.mag, d.mesh, d.mag_proj)
        vc, bc = self.velocity_constraints(0.0), self.magnetic_constraints(0.0)
        u0[vc.dofs] = vc.values
        b0[bc.dofs] = bc.values
        return SavState(0, 0.0, u0, b0, np.zeros(d.n_p), 1.0)

    def explicit_terms(self, u, b):
        tri = self.disc.trilinear
        F_u = tri.c0h(u, u) + tri.c1h_velocity(b, b)
        F_b = tri.c1h_magnetic(b, u)
        return F_u, F_b

    # steps -----------------------------------------------------------------------

    def _split_solve(self, a, beta, rhs_u, rhs_b, F_u, F_b, t):
        vc, bc = self.velocity_constraints(t), self.magnetic_constraints(t)
        S = self.cache.stokes(a, beta, vc)
        Mb = self.cache.magnetic(a, beta, bc)
        u1, p1 = solve_stokes(S, rhs_u, vc)
        b1 = solve_magnetic(Mb, rhs_b, bc)
        u2, p2 = solve_stokes(S, F_u, vc.homogeneous())
        b2 = solve_magnetic(Mb, -F_b, bc.homogeneous())
        return (u1, p1, b1), (u2, p2, b2)

    def _scalar(self, lead, rhs0, F_u, F_b, first, second, qe, mass_coef, stiff_coef, step):
        d = self.disc
        u1, _, b1 = first
        u2, _, b2 = second
        S1 = F_u @ u1 - F_b @ b1
        S2 = F_u @ u2 - F_b @ b2
        energy2 = mass_coef * (u2 @ (d.M0 @ u2) + b2 @ (d.M1 @ b2)) + stiff_coef * (
            u2 @ (d.A0 @ u2) + b2 @ (d.A1 @ b2))
        denom = lead + S2 / qe**2
        if not denom > 0:
            raise SolvabilityError(step, f"scalar coefficient {denom:.3e} is not positive")
        q_h = (rhs0 - S1 / qe) / denom
        diag = StepDiagnostics(S2, energy2, denom, q_h / qe)
        if diag.positivity_gap > POSITIVITY_TOL and max(abs(S2), abs(energy2)) > 1e-14:
            log.warning("step %d: positivity identity gap %.3e", step, diag.positivity_gap)
        return q_h, diag

    def bdf1_step(self, s0: SavState) -> SavState:
        p, d = self.params, self.disc
        dt, T = p.dt, p.T
        t1 = s0.t + dt
        fu, gb = self.loads(t1)
        rhs_u = fu + d.M0 @ s0.u / dt - 0.5 * (d.A0 @ s0.u)
        rhs_b = gb + d.M1 @ s0.b / dt - 0.5 * (d.A1 @ s0.b)
        F_u, F_b = self.explicit_terms(s0.u, s0.b)
        first, second = self._split_solve(1.0 / dt, 0.5, rhs_u, rhs_b, F_u, F_b, t1)
        qe = q_exact(t1, T)
        q_h, diag = self._scalar((dt + T) / (T * dt), s0.q / dt, F_u, F_b, first, second, qe,
                                 1.0 / dt, 0.5, 1)
        xi = q_h / qe
        u = first[0] + xi * second[0]
        pr = first[1] + xi * second[1]
        b = first[2] + xi * second[2]
        self.step_diagnostics.append(diag)
        return self._checked(SavState(1, t1, u, b, pr, q_h, s0.u, s0.b, s0.q))

    def bdf2_step(self, s: SavState) -> SavState:
        if s.u_prev is None:
            raise ValueError("BDF2 needs two history levels")
        p, d = self.params, self.disc
        dt, T = p.dt, p.T
        t1 = s.t + dt
        fu, gb = self.loads(t1)
        ub, bb = extrapolate(s.u, s.u_prev), extrapolate(s.b, s.b_prev)
        rhs_u = fu + d.M0 @ (4.0 * s.u - s.u_prev) / (2.0 * dt)
        rhs_b = gb + d.M1 @ (4.0 * s.b - s.b_prev) / (2.0 * dt)
        F_u, F_b = self.explicit_terms(ub, bb)
        first, second = self._split_solve(1.5 / dt, 1.0, rhs_u, rhs_b, F_u, F_b, t1)
        qe = q_exact(t1, T)
        q_h, diag = self._scalar(1.5 / dt + 1.0 / T, (4.0 * s.q - s.q_prev) / (2.0 * dt), F_u, F_b,
                                 first, second, qe, 1.5 / dt, 1.0, s.n + 1)
        xi = q_h / qe
        u = first[0] + xi * second[0]
        pr = first[1] + xi * second[1]
        b = first[2] + xi * second[2]
        new = SavState(s.n + 1, t1, u, b, pr, q_h, s.u, s.b, s.q)
        if self.check_residual:
            diag.residual = self.bdf2_residual(s, new, fu, gb)
        self.step_diagnostics.append(diag)
        return self._checked(new)

    def _checked(self, s: SavState) -> SavState:
        for name in ("u", "b", "p"):
            if not np.all(np.isfinite(getattr(s, name))):
                raise NonFiniteError(s.n, name)
        if not math.isfinite(s.q):
            raise NonFiniteError(s.n, "q")
        return s

    # un-split residual ------------------------------------------------------------

    def bdf2_residual(self, s: SavState, new: SavState, fu=None, gb=None) -> float:
        """Relative residual of the coupled BDF2 equations at the recombined solution."""
        d, p = self.disc, self.params
        dt, T = p.dt, p.T
        if fu is None:
            fu, gb = self.loads(new.t)
        ub, bb = extrapolate(s.u, s.u_prev), extrapolate(s.b, s.b_prev)
        F_u, F_b = self.explicit_terms(ub, bb)
        qe = q_exact(new.t, T)
        xi = new.q / qe
        vfree = np.setdiff1d(np.arange(d.n_u), self.velocity_constraints(new.t).dofs)
        bfree = np.setdiff1d(np.arange(d.n_b), self.magnetic_constraints(new.t).dofs)
        tu = [d.M0 @ (3 * new.u - 4 * s.u + s.u_prev) / (2 * dt), d.A0 @ new.u, d.B.T @ new.p,
              -xi * F_u, -fu]
        tb = [d.M1 @ (3 * new.b - 4 * s.b + s.b_prev) / (2 * dt), d.A1 @ new.b, xi * F_b, -gb]
        tq = [(3 * new.q - 4 * s.q + s.q_prev) / (2 * dt), new.q / T,
              (F_u @ new.u - F_b @ new.b) / qe]
        ru = np.linalg.norm(sum(tu)[vfree]) / max(max(np.linalg.norm(x[vfree]) for x in tu), 1e-300)
        rb = np.linalg.norm(sum(tb)[bfree]) / max(max(np.linalg.norm(x[bfree]) for x in tb), 1e-300)
        rq = abs(sum(tq)) / max(max(abs(x) for x in tq), 1e-300)
        div = d.B @ new.u
        rd = np.linalg.norm(div) / max(np.linalg.norm(d.B @ s.u), np.linalg.norm(new.u), 1e-300)
        return float(max(ru, rb, rq, rd))


# ---------------------------------------------------------------------------
# energies


def energy(disc: Discretization, state: SavState, step: int | None = None) -> EnergyRecord:
    u, b = state.u, state.b
    return EnergyRecord(
        step=state.n if step is None else step, t=state.t,
        kinetic=float(u @ (disc.M0 @ u)), magnetic=float(b @ (disc.M1 @ b)), q2=float(state.q**2),
        diss_u=float(u @ (disc.A0 @ u)), diss_b=float(b @ (disc.A1 @ b)),
    )


def bdf2_energy(disc: Discretization, state: SavState) -> float:
    """Half the sum of level and extrapolated-level energies (requires history)."""
    ub, bb = extrapolate(state.u, state.u_prev), extrapolate(state.b, state.b_prev)
    qb = 2 * state.q - state.q_prev
    m0 = lambda v: v @ (disc.M0 @ v)
    m1 = lambda v: v @ (disc.M1 @ v)
    return 0.5 * float(m0(state.u) + m0(ub) + m1(state.b) + m1(bb) + state.q**2 + qb**2)


def dissipation(disc: Discretization, state: SavState, T: float) -> float:
    u, b = state.u, state.b
    return float(u @ (disc.A0 @ u) + b @ (disc.A1 @ b) + state.q**2 / T)


def bdf1_energy_gap(disc: Discretization, s0: SavState, s1: SavState, dt: float, T: float) -> float:
    """Residual of the exact first-step energy balance for unforced, homogeneous data."""
    m0 = lambda v: v @ (disc.M0 @ v)
    m1 = lambda v: v @ (disc.M1 @ v)
    a0 = lambda v: v @ (disc.A0 @ v)
    a1 = lambda v: v @ (disc.A1 @ v)
    du, db = s1.u - s0.u, s1.b - s0.b
    su, sb = s1.u + s0.u, s1.b + s0.b
    lhs = (0.5 * (m0(s1.u) + m1(s1.b) + s1.q**2 + m0(du) + m1(db) + (s1.q - s0.q) ** 2)
           + 0.25 * dt * (a0(s1.u) + a1(s1.b) + a0(su) + a1(sb)) + dt * s1.q**2 / T)
    rhs = 0.5 * (m0(s0.u) + m1(s0.b) + s0.q**2) + 0.25 * dt * (a0(s0.u) + a1(s0.b))
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    state: SavState
    energies: list[EnergyRecord]
    diagnostics: list[StepDiagnostics]
    div_max: float
    factorizations: int
    integrator: Integrator = field(repr=False)


def run(params: SchemeParams, mesh, problem: Problem, k: int = 1, disc: Discretization | None = None,
        energy_csv=None, snapshot=None, residual_steps=(), on_step=None) -> RunResult:
    """One BDF1 step followed by N BDF2 steps.

    ``energy_csv`` (path or file object) receives one EnergyRecord row per
    level as it is computed. ``snapshot(state)`` is called after every step.
    ``residual_steps`` lists BDF2 step indices at which the un-split residual
    is evaluated.
    """
    disc = disc or discretize(mesh, k, params.coef)
    integ = Integrator(disc, params, problem)
    s = integ.initial_state()
    records = []
    writer, fh, own = None, None, False
    if energy_csv is not None:
        if hasattr(energy_csv, "write"):
            fh = energy_csv
        else:
            fh, own = open(energy_csv, "w", newline=""), True
        writer = csv.DictWriter(fh, fieldnames=list(asdict(energy(disc, s)).keys()))
        writer.writeheader()

    def emit(rec):
        records.append(rec)
        if writer is not None:
            writer.writerow(asdict(rec))
            fh.flush()

    dt, T = params.dt, params.T
    emit(energy(disc, s))
    div_max = 0.0
    diss_acc = 0.0
    try:
        for step in range(1, params.n_steps + 1):
            if step == 1:
                s = integ.bdf1_step(s)
            else:
                integ.check_residual = step in residual_steps
                s = integ.bdf2_step(s)
                diss_acc += 2 * dt * dissipation(disc, s, T)
            rec = energy(disc, s)
            rec.telescoped = bdf2_energy(disc, s) + diss_acc
            rec.dissipated = diss_acc
            rec.positivity_gap = integ.step_diagnostics[-1].positivity_gap
            rec.div_max = float(disc.cell_divergence(s.u).max())
            div_max = max(div_max, rec.div_max)
            emit(rec)
            if snapshot is not None:
                snapshot(s)
            if on_step is not None:
                on_step(s, rec)
    finally:
        if own:
            fh.close()
    return RunResult(s, records, integ.step_diagnostics, div_max, integ.cache.factorizations, integ)

