"""Experiment runners shared by the command line, the tests and the demos.

Nothing here decides pass or fail; callers compare the returned numbers
against their own bands.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import ErrorReport, compute_errors, convergence_rates, recirculation_summary
from .forms import local_matrix
from .io import vertex_vectors, write_fields
from .mesh import build_mesh, level_for_size
from .poly import MonomialBasis, dim_poly
from .problems import TANGENTIAL, cavity_problem, decay_problem, example1_problem
from .sav import (Integrator, NonFiniteError, SchemeParams, SolvabilityError, bdf1_energy_gap, q_exact,
                  run)
from .spaces import interpolate
from .system import LinearOperatorCache, discretize, solve_stokes, velocity_dirichlet

# ---------------------------------------------------------------------------
# convergence


@dataclass
class LevelResult:
    report: ErrorReport
    div_max: float
    positivity_max: float
    residuals: list
    factorizations: int
    n_steps: int


def residual_steps_for(n_steps: int, count: int, seed: int) -> tuple:
    """``count`` distinct BDF2 step indices picked at random (BDF2 steps are 2..n_steps)."""
    pool = np.arange(2, n_steps + 1)
    if len(pool) == 0 or count <= 0:
        return ()
    rng = np.random.default_rng(seed)
    return tuple(sorted(int(s) for s in rng.choice(pool, size=min(count, len(pool)), replace=False)))


def run_level(family: str, level: int, k: int = 1, nu=1.0, mu=1.0, sigma=1.0, T=1.0, dt="auto",
              residual_count: int = 3) -> LevelResult:
    mesh = build_mesh(family, level)
    h = float(np.max(mesh.diameters()))
    if dt == "auto":
        params = SchemeParams.from_mesh_size(h, T=T, nu=nu, mu=mu, sigma=sigma)
    else:
        params = SchemeParams(nu=nu, mu=mu, sigma=sigma, T=T, N=max(math.ceil(T / float(dt) - 1e-12) - 1, 0))
    problem = example1_problem(nu, mu, sigma)
    steps = residual_steps_for(params.n_steps, residual_count, seed=level)
    res = run(params, mesh, problem, k=k, residual_steps=steps)
    rep = compute_errors(res.integrator.disc, res.state, problem.solution, T, q_exact(T, T), level=level)
    return LevelResult(
        report=rep, div_max=res.div_max,
        positivity_max=max(d.positivity_gap for d in res.diagnostics),
        residuals=[d.residual for d in res.diagnostics if d.residual is not None],
        factorizations=res.factorizations, n_steps=params.n_steps,
    )


def convergence_study(family: str, levels, k: int = 1, progress=None, **kw) -> tuple[list, list]:
    results = []
    for lvl in levels:
        r = run_level(family, lvl, k, **kw)
        results.append(r)
        if progress:
            progress(r)
    reports = [r.report for r in results]
    rates = convergence_rates(reports) if len(reports) > 1 else []
    return results, rates


# ---------------------------------------------------------------------------
# stability


@dataclass
class StabilityResult:
    factor: float
    dt: float
    telescoped: np.ndarray
    energies: list
    first_violation: int | None
    max_increase: float
    bdf1_gap: float
    breakdown: str | None = None

    @property
    def monotone(self) -> bool:
        return self.first_violation is None

    @property
    def bounded(self) -> bool:
        return self.breakdown is None and bool(np.all(np.isfinite(self.telescoped)))


def check_monotone(values, rtol: float = 1e-10):
    """First index i with values[i] > values[i-1] (1 + rtol), and the largest relative increase."""
    values = np.asarray(values, dtype=float)
    inc = (values[1:] - values[:-1]) / np.maximum(np.abs(values[:-1]), 1e-300)
    bad = np.flatnonzero(inc > rtol)
    return (int(bad[0]) + 1 if len(bad) else None), float(inc.max(initial=0.0))


def stability_run(family: str = "square", level: int = 2, factor: float = 1.0, steps: int = 50, k: int = 1,
                  energy_csv=None, negative_control: bool = False, amplitude: float = 1.0,
                  nu=1.0, mu=1.0, sigma=1.0) -> StabilityResult:
    """Unforced decay run with dt = factor * h over ``steps`` steps (T = steps * dt)."""
    mesh = build_mesh(family, level)
    h = float(np.max(mesh.diameters()))
    dt = factor * h
    params = SchemeParams(nu=nu, mu=mu, sigma=sigma, T=steps * dt, N=steps - 1)
    problem = decay_problem(nu, mu, sigma, amplitude)
    first = {}

    def grab(state, rec):
        if state.n <= 1:
            first[state.n] = state

    disc = discretize(mesh, k, params.coef)
    if negative_control:
        # test hook: step with sign-flipped dissipation
        disc = replace(disc, A0=-disc.A0, A1=-disc.A1)
    records, breakdown, broke_at = [], None, None

    def collect(state, rec):
        grab(state, rec)
        records.append(rec)

    try:
        res = run(params, mesh, problem, k=k, disc=disc, energy_csv=energy_csv, on_step=collect)
        records = res.energies[1:]
    except (SolvabilityError, NonFiniteError) as exc:
        breakdown, broke_at = str(exc), exc.step
    tel = np.array([r.telescoped for r in records])
    if negative_control:
        # records accumulated the flipped dissipation; measure with the true one
        tel = tel - 2 * np.array([r.dissipated for r in records])
    viol, inc = check_monotone(tel)
    if viol is not None:
        viol = records[viol].step
    elif broke_at is not None:
        viol = broke_at
    gap = float("nan")
    if 1 in first and not negative_control:
        gap = bdf1_energy_gap(disc, Integrator(disc, params, problem).initial_state(), first[1], dt, params.T)
    return StabilityResult(factor, dt, tel, records, viol, inc, gap, breakdown)


# ---------------------------------------------------------------------------
# cavity


@dataclass
class CavityResult:
    h: float
    level: int
    div_max: float
    finite: bool
    q: float
    files: list = field(default_factory=list)
    summary: object = None
    seconds: float = 0.0


def cavity_run(h: float = 0.0177, out_dir: str | None = None, snapshot_times=(), magnetic_bc: str = TANGENTIAL,
               nu=0.01, mu=1.0, sigma=100.0, T=1.0, k: int = 1, level: int | None = None) -> CavityResult:
    import time

    t0 = time.perf_counter()
    level = level_for_size(h) if level is None else level
    mesh = build_mesh("square", level)
    hh = float(np.max(mesh.diameters()))
    params = SchemeParams.from_mesh_size(hh, T=T, nu=nu, mu=mu, sigma=sigma)
    problem = cavity_problem(nu, mu, sigma, magnetic_bc=magnetic_bc)
    files = []
    wanted = sorted(set(float(t) for t in snapshot_times) | {T})
    disc_box = {}

    def snap(state):
        if out_dir is None:
            return
        for t in wanted:
            if abs(state.t - t) <= 0.5 * params.dt:
                path = os.path.join(out_dir, f"cavity_t{t:g}.vtk")
                with open(path, "w") as fh:
                    fh.write(write_fields(disc_box["d"], state, f"cavity t={state.t:.6f}"))
                files.append(path)

    disc = discretize(mesh, k, params.coef)
    disc_box["d"] = disc
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    res = run(params, mesh, problem, k=k, disc=disc, snapshot=snap,
              energy_csv=os.path.join(out_dir, "cavity_energy.csv") if out_dir else None)
    s = res.state
    finite = bool(np.all(np.isfinite(s.u)) and np.all(np.isfinite(s.b)) and np.all(np.isfinite(s.p)))
    U = vertex_vectors(disc, s.u, "velocity")
    summary = recirculation_summary(mesh.vertices, U)
    return CavityResult(hh, level, res.div_max, finite, s.q, files, summary, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# patch tests


@dataclass
class PatchResult:
    name: str
    family: str
    k: int
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


def _rel(diff, ref):
    return float(np.max(np.abs(diff)) / max(np.max(np.abs(ref)), 1.0))


def projector_reproduction(projectors) -> float:
    worst = 0.0
    for proj in {id(p.pi_zero): p for p in projectors}.values():
        I = np.eye(proj.dof_matrix.shape[1])
        worst = max(worst, np.max(np.abs(proj.pi_nabla @ proj.dof_matrix - I)),
                    np.max(np.abs(proj.pi_zero @ proj.dof_matrix - I)))
    return float(worst)


def _poly_rhs(proj, tag, coef, c):
    """Exact polynomial-side value of a bilinear form against the polynomial with coefficients c."""
    nk = len(proj.gram)
    if tag in ("m0h", "m1h"):
        H2 = np.zeros((2 * nk, 2 * nk))
        H2[:nk, :nk] = H2[nk:, nk:] = proj.gram
        s = coef.mu if tag == "m1h" else 1.0
        return s * (proj.pi_zero.T @ H2 @ c)
    if tag == "a0h":
        G2 = np.zeros((2 * nk, 2 * nk))
        G2[:nk, :nk] = G2[nk:, nk:] = proj.gram_grad
        return coef.nu * (proj.pi_nabla.T @ G2 @ c)
    B = MonomialBasis(proj.k, np.zeros(2), proj.h)
    m = dim_poly(proj.k - 1)
    cx, cy = c[:nk], c[nk:]
    curl_q = (B.dx @ cy - B.dy @ cx)[:m]
    div_q = (B.dx @ cx + B.dy @ cy)[:m]
    return (proj.curl.T @ proj.gram_low @ curl_q + proj.div.T @ proj.gram_low @ div_q) / coef.sigma


def k_consistency(projectors, tag: str, coef, rng) -> float:
    """max over cells of |K (D c) - polynomial side| relative, for random c."""
    worst = 0.0
    for proj in {id(p.pi_zero): p for p in projectors}.values():
        K = local_matrix(proj, tag, coef)
        C = rng.standard_normal((proj.dof_matrix.shape[1], 3))
        lhs = K @ proj.dof_matrix @ C
        rhs = np.column_stack([_poly_rhs(proj, tag, coef, C[:, j]) for j in range(C.shape[1])])
        worst = max(worst, _rel(lhs - rhs, rhs))
    return worst


def stokes_patch(disc) -> float:
    """Solve with an affine divergence-free velocity as data; returns max nodal error."""
    def uex(x):
        return np.column_stack([x[:, 0] + 2 * x[:, 1] + 0.3, 3 * x[:, 0] - x[:, 1] - 0.1])

    cache = LinearOperatorCache(disc)
    cons = velocity_dirichlet(disc, uex)
    fac = cache.stokes(1.0, 1.0, cons)
    uI = interpolate(uex, disc.vel, disc.mesh, disc.vel_proj)
    u, p = solve_stokes(fac, disc.M0 @ uI, cons)
    return float(max(np.max(np.abs(u - uI)), np.max(np.abs(p))))


PATCH_TOLERANCES = {"reproduction": 1e-12, "k-consistency": 1e-11, "stokes": 1e-10}


def patch_tests(families=("square", "nonconvex", "voronoi"), ks=(1, 2), level: int = 1,
                seed: int = 0) -> list[PatchResult]:
    from .forms import Coefficients

    coef = Coefficients(0.7, 1.3, 2.0)
    out = []
    for fam in families:
        mesh = build_mesh(fam, level)
        for k in ks:
            rng = np.random.default_rng(seed)
            disc = discretize(mesh, k, coef)
            out.append(PatchResult("reproduction", fam, k,
                                   max(projector_reproduction(disc.vel_proj),
                                       projector_reproduction(disc.mag_proj)),
                                   PATCH_TOLERANCES["reproduction"]))
            kc = max(k_consistency(disc.vel_proj, "m0h", coef, rng),
                     k_consistency(disc.vel_proj, "a0h", coef, rng),
                     k_consistency(disc.mag_proj, "m1h", coef, rng),
                     k_consistency(disc.mag_proj, "a1h", coef, rng))
            out.append(PatchResult("k-consistency", fam, k, kc, PATCH_TOLERANCES["k-consistency"]))
            out.append(PatchResult("stokes", fam, k, stokes_patch(disc), PATCH_TOLERANCES["stokes"]))
    return out
