"""Command-line entry point: ``vemmhd <subcommand> [options]``.

Exit codes: 0 pass, 1 check failure, 2 usage or config error, 3 solver failure.
The acceptance bands used by ``--check`` live here so the library stays policy-free.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import harness
from .io import ConfigError, RunConfig, parse_config, set_option, validate, write_div_table, write_table
from .mesh import FAMILIES, MeshError, build_mesh, check_regularity, write_mesh
from .sav import NonFiniteError, SolvabilityError
from .spaces import ElementQualityError
from .system import AssemblyError, SolverError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3

# (lower, upper) bands on the observed rates of the finest two level pairs
RATE_BANDS = {
    "u_L2": (1.8, 2.3),
    "u_H1": (0.85, 1.15),
    "b_L2": (1.8, 2.2),
    "b_H1": (0.85, 1.15),
    "q": (1.8, None),
    "p_L2": (0.9, None),
}
DIV_TOL = 1e-10
POSITIVITY_TOL = 1e-9
RESIDUAL_TOL = 1e-9
ENERGY_RTOL = 1e-10
# level 2 reference values and the allowed factor
BALLPARK = {"u_L2": 1.5820e-2, "b_L2": 1.4814e-3}
BALLPARK_FACTOR = 3.0

SOLVER_ERRORS = (SolvabilityError, NonFiniteError, SolverError, AssemblyError, ElementQualityError,
                 np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vemmhd", description="Divergence-free VEM / BDF2 SAV solver for 2D incompressible MHD.")
    sub = p.add_subparsers(dest="command", metavar="{convergence,cavity,stability,meshgen,patch-test}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--levels", help="e.g. 1-4 or 2,3,5")
    common.add_argument("--k", type=int)
    common.add_argument("--dt", help="auto, a step size, or mesh-size multiples such as h,10h,100h")
    common.add_argument("--check", action="store_true", help="exit 1 if an acceptance band fails")
    common.add_argument("--out", help="output directory")
    sub.add_parser("convergence", parents=[common], help="manufactured-solution error tables")
    c = sub.add_parser("cavity", parents=[common], help="lid-driven cavity with VTK snapshots")
    c.add_argument("--h", type=float, help="target mesh size (default 0.0177)")
    c.add_argument("--magnetic-bc", dest="magnetic_bc", choices=("tangential", "wall"))
    s = sub.add_parser("stability", parents=[common], help="unforced decay runs with large steps")
    s.add_argument("--steps", type=int)
    s.add_argument("--negative-control", action="store_true", help=argparse.SUPPRESS)
    sub.add_parser("meshgen", parents=[common], help="write mesh files and quality statistics")
    sub.add_parser("patch-test", parents=[common], help="projector, consistency and Stokes patch tests")
    return p


def load_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc.strerror}") from None
        cfg = parse_config(text)
    else:
        cfg = RunConfig()
    for key in ("family", "levels", "k", "dt", "out", "h", "steps", "magnetic_bc"):
        val = getattr(args, key, None)
        if val is not None:
            set_option(cfg, key, val)
    if args.command == "cavity" and "problem" not in cfg.explicit:
        cfg.problem = "cavity"
        cfg.with_problem_defaults()
    validate(cfg)
    return cfg


def _say(msg=""):
    print(msg, flush=True)


def _band_ok(val, band) -> bool:
    lo, hi = band
    return val is not None and np.isfinite(val) and val >= lo and (hi is None or val <= hi)


# ---------------------------------------------------------------------------
# subcommands


def cmd_convergence(cfg: RunConfig, check: bool) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    dt = cfg.dt
    if isinstance(dt, list):
        raise ConfigError("dt", "convergence takes 'auto' or a single step size")
    kw = dict(nu=cfg.nu, mu=cfg.mu, sigma=cfg.sigma, T=cfg.T, dt=dt, residual_count=cfg.residual_steps)
    results = []
    for lvl in cfg.levels:
        t0 = time.perf_counter()
        try:
            r = harness.run_level(cfg.family, lvl, cfg.k, **kw)
        except SOLVER_ERRORS as exc:
            raise _LevelFailure(lvl, exc) from exc
        results.append(r)
        e = r.report
        _say(f"level {lvl}: h={e.h:.4f} u_L2={e.u_L2:.4e} u_H1={e.u_H1:.4e} p_L2={e.p_L2:.4e} "
             f"b_L2={e.b_L2:.4e} b_H1={e.b_H1:.4e} q={e.q:.4e} div={r.div_max:.2e} "
             f"({time.perf_counter() - t0:.1f}s)")
    reports = [r.report for r in results]
    from .analysis import convergence_rates

    rates = convergence_rates(reports) if len(reports) > 1 else None
    label = f"{cfg.family}-k{cfg.k}"
    table = write_table(reports, rates, label=cfg.family)
    div = write_div_table([(f"{cfg.family}-{r.report.level}", r.report.h, r.div_max) for r in results])
    tpath = os.path.join(cfg.out, f"convergence_{label}.csv")
    dpath = os.path.join(cfg.out, f"divergence_{label}.csv")
    with open(tpath, "w") as fh:
        fh.write(table)
    with open(dpath, "w") as fh:
        fh.write(div)
    _say(table)
    _say(f"wrote {tpath} and {dpath}")
    if rates is None:
        _say("warning: a single level gives no rates; nothing to check")
        return EXIT_OK
    if not check:
        return EXIT_OK
    failures = []
    for i, rate in list(enumerate(rates))[-2:]:
        pair = f"{reports[i].level}->{reports[i + 1].level}"
        for n, band in RATE_BANDS.items():
            if not _band_ok(rate[n], band):
                failures.append(f"rate {n} {pair} = {rate[n]} outside {band}")
    for r in results:
        lvl = r.report.level
        if r.div_max > DIV_TOL:
            failures.append(f"div u_h {r.div_max:.2e} > {DIV_TOL:g} at level {lvl}")
        if r.positivity_max > POSITIVITY_TOL:
            failures.append(f"positivity identity gap {r.positivity_max:.2e} at level {lvl}")
        if r.residuals and max(r.residuals) > RESIDUAL_TOL:
            failures.append(f"un-split residual {max(r.residuals):.2e} at level {lvl}")
        if lvl == 2 and cfg.family == "square" and cfg.k == 1 and cfg.dt == "auto" and _default_params(cfg):
            for n, ref in BALLPARK.items():
                val = getattr(r.report, n)
                if not ref / BALLPARK_FACTOR <= val <= ref * BALLPARK_FACTOR:
                    failures.append(f"level 2 {n} = {val:.4e} not within x{BALLPARK_FACTOR:g} of {ref:.4e}")
    return _report(failures)


def _default_params(cfg) -> bool:
    return cfg.nu == cfg.mu == cfg.sigma == cfg.T == 1.0


def cmd_cavity(cfg: RunConfig, check: bool) -> int:
    h = cfg.h if cfg.h is not None else 0.0177
    level = cfg.levels[0] if "levels" in cfg.explicit and cfg.h is None else None
    r = harness.cavity_run(h=h, out_dir=cfg.out, snapshot_times=cfg.snapshot_times, magnetic_bc=cfg.magnetic_bc,
                           nu=cfg.nu, mu=cfg.mu, sigma=cfg.sigma, T=cfg.T, k=cfg.k, level=level)
    s = r.summary
    _say(f"cavity: level {r.level} h={r.h:.4f} nu={cfg.nu:g} sigma={cfg.sigma:g} "
         f"magnetic_bc={cfg.magnetic_bc} ({r.seconds:.1f}s)")
    _say(f"  max div u_h = {r.div_max:.2e}, finite = {r.finite}, q_h(T) = {r.q:.4f}")
    _say(f"  vortex: sign changes u1(x=0.5) = {s.sign_changes_u1}, u2(y=0.5) = {s.sign_changes_u2}, "
         f"lid shear = {s.lid_shear:.3f}")
    for f in r.files:
        _say(f"  wrote {f}")
    if not check:
        return EXIT_OK
    failures = []
    if not r.finite:
        failures.append("non-finite fields")
    if r.div_max > DIV_TOL:
        failures.append(f"div u_h {r.div_max:.2e} > {DIV_TOL:g}")
    if not s.single_vortex:
        failures.append("no single primary recirculation")
    if not s.lid_boundary_layer:
        failures.append("no lid-adjacent shear layer")
    return _report(failures)


def cmd_stability(cfg: RunConfig, check: bool, negative_control: bool = False) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    factors = cfg.dt if isinstance(cfg.dt, list) else cfg.dt_factors
    if not isinstance(cfg.dt, list) and cfg.dt != "auto":
        raise ConfigError("dt", "stability takes mesh-size multiples such as h,10h,100h")
    level = cfg.levels[0] if "levels" in cfg.explicit else 2
    failures = []
    for fac in factors:
        path = os.path.join(cfg.out, f"energy_{cfg.family}_L{level}_dt{fac:g}h.csv")
        r = harness.stability_run(cfg.family, level, fac, cfg.steps, cfg.k, energy_csv=path,
                                  negative_control=negative_control, nu=cfg.nu, mu=cfg.mu, sigma=cfg.sigma)
        last = r.telescoped[-1] if len(r.telescoped) else float("nan")
        _say(f"dt = {fac:g}h = {r.dt:.4e}: {len(r.telescoped)} steps, telescoped energy "
             f"{r.telescoped[0] if len(r.telescoped) else float('nan'):.6e} -> {last:.6e}, "
             f"max relative increase {r.max_increase:.2e}")
        if r.breakdown:
            failures.append(f"dt={fac:g}h: breakdown ({r.breakdown})")
        elif not r.monotone:
            failures.append(f"dt={fac:g}h: telescoped energy increased at step {r.first_violation}")
        elif not r.bounded:
            failures.append(f"dt={fac:g}h: unbounded energy")
        _say(f"  wrote {path}")
    # monotonicity is the point of this command, so it is always enforced
    return _report(failures)


def cmd_meshgen(cfg: RunConfig, check: bool) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    failures = []
    for lvl in cfg.levels:
        mesh = build_mesh(cfg.family, lvl)
        path = os.path.join(cfg.out, f"mesh_{cfg.family}_L{lvl}.txt")
        with open(path, "w") as fh:
            fh.write(write_mesh(mesh))
        reg = check_regularity(mesh)
        h = float(np.max(mesh.diameters()))
        _say(f"{cfg.family} level {lvl}: {mesh.n_cells} cells, {mesh.n_vertices} vertices, h={h:.4f}, "
             f"min separation ratio {reg.min_vertex_separation_ratio:.3f} "
             f"({len(reg.separation_violations)} cells below {reg.varrho_used:g}), "
             f"nonconvex cells {int(np.sum(~reg.convex_flags))} -> {path}")
        # separation is reported only; a cell that is not star-shaped is a generator bug
        if check and reg.star_violations:
            failures.append(f"level {lvl}: cells not star-shaped {reg.star_violations[:10]}")
    return _report(failures)


def cmd_patch_test(cfg: RunConfig, check: bool) -> int:
    fams = (cfg.family,) if "family" in cfg.explicit else FAMILIES
    ks = (cfg.k,) if "k" in cfg.explicit else (1, 2)
    res = harness.patch_tests(fams, ks)
    names = list(harness.PATCH_TOLERANCES)
    _say(f"{'family':<10} {'k':>2}  " + "  ".join(f"{n:>22}" for n in names))
    failures = []
    for fam in fams:
        for k in ks:
            cells = []
            for n in names:
                r = next(x for x in res if x.family == fam and x.k == k and x.name == n)
                cells.append(f"{'PASS' if r.passed else 'FAIL'} {r.value:9.2e}/{r.tol:.0e}".rjust(22))
                if not r.passed:
                    failures.append(f"{n} {fam} k={k}: {r.value:.2e} > {r.tol:.0e}")
            _say(f"{fam:<10} {k:>2}  " + "  ".join(cells))
    return _report(failures)


def _report(failures) -> int:
    for f in failures:
        _say(f"FAIL: {f}")
    if failures:
        return EXIT_CHECK
    _say("all checks passed")
    return EXIT_OK


class _LevelFailure(Exception):
    def __init__(self, level, exc):
        super().__init__(f"level {level}: {type(exc).__name__}: {exc}")


COMMANDS = {
    "convergence": cmd_convergence,
    "cavity": cmd_cavity,
    "stability": cmd_stability,
    "meshgen": cmd_meshgen,
    "patch-test": cmd_patch_test,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        cfg = load_config(args)
    except (UsageError, ConfigError) as exc:
        print(f"vemmhd: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "stability":
            return cmd_stability(cfg, args.check, args.negative_control)
        return COMMANDS[args.command](cfg, args.check)
    except (ConfigError, MeshError) as exc:
        print(f"vemmhd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _LevelFailure as exc:
        print(f"vemmhd: solver failure at {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SOLVER_ERRORS as exc:
        print(f"vemmhd: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
