"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -v tests/test_acceptance.py`` or directly with
``python tests/test_acceptance.py``. Criteria 1, 3, 6 and 7 share the
square-family convergence study over levels 2 to 5.
"""

import math
import os
import sys
import tempfile
import time

import numpy as np
import pytest

from vemmhd.analysis import recirculation_summary
from vemmhd.harness import PATCH_TOLERANCES, cavity_run, convergence_study, patch_tests, stability_run
from vemmhd.io import read_vtk
from vemmhd.mesh import FAMILIES

LEVELS = (2, 3, 4, 5)
RATE_BANDS = {"u_L2": (1.8, 2.3), "u_H1": (0.85, 1.15), "b_L2": (1.8, 2.2), "b_H1": (0.85, 1.15),
              "q": (1.8, math.inf), "p_L2": (0.9, math.inf)}
BALLPARK = {"u_L2": 1.5820e-2, "b_L2": 1.4814e-3}
DIV_TOL = 1e-10
ENERGY_RTOL = 1e-10
POSITIVITY_TOL = 1e-9
RESIDUAL_TOL = 1e-9
CAVITY_H = 0.0354
CAVITY_BUDGET = 300.0


def _line(n, ok, detail):
    out = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    capman = _CAPTURE.get("manager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + out, flush=True)
    else:
        print(out, flush=True)
    return ok


_CAPTURE = {}


@pytest.fixture(autouse=True)
def _uncaptured(request):
    _CAPTURE["manager"] = request.config.pluginmanager.getplugin("capturemanager")
    yield
    _CAPTURE.pop("manager", None)


_STUDY = {}


def study():
    if "r" not in _STUDY:
        _STUDY["r"] = convergence_study("square", LEVELS, k=1, residual_count=3)
    return _STUDY["r"]


# ---------------------------------------------------------------------------


def criterion_1():
    results, rates = study()
    bad = []
    for i in (len(rates) - 2, len(rates) - 1):
        pair = f"{LEVELS[i]}->{LEVELS[i + 1]}"
        for n, (lo, hi) in RATE_BANDS.items():
            r = rates[i][n]
            if r is None or not lo <= r <= hi:
                bad.append(f"{n} {pair}={r}")
    shown = " ".join(f"{n}={rates[-1][n]:.2f}" for n in RATE_BANDS)
    return _line(1, not bad, f"finest-pair rates {shown}" + (f"; out of band: {bad}" if bad else ""))


def criterion_2():
    rep = next(r.report for r in study()[0] if r.report.level == 2)
    ok = all(ref / 3 <= getattr(rep, n) <= ref * 3 for n, ref in BALLPARK.items())
    return _line(2, ok, f"level 2 u_L2={rep.u_L2:.4e} (ref 1.5820e-2) b_L2={rep.b_L2:.4e} (ref 1.4814e-3)")


def criterion_3():
    worst = max(r.div_max for r in study()[0])
    return _line(3, worst <= DIV_TOL, f"max cell div u_h over all runs {worst:.2e} <= {DIV_TOL:g}")


def criterion_4():
    parts, ok = [], True
    for fac in (1.0, 10.0, 100.0):
        r = stability_run("square", level=2, factor=fac, steps=50)
        good = r.breakdown is None and len(r.telescoped) == 50 and r.bounded and r.max_increase <= ENERGY_RTOL
        ok &= good
        parts.append(f"{fac:g}h: max rel increase {r.max_increase:.1e}" + ("" if good else " BAD"))
    return _line(4, ok, "; ".join(parts))


def criterion_5():
    res = patch_tests(FAMILIES, (1, 2))
    worst = {n: max(r.value for r in res if r.name == n) for n in PATCH_TOLERANCES}
    ok = all(r.passed for r in res)
    return _line(5, ok, " ".join(f"{n}={v:.1e}/{PATCH_TOLERANCES[n]:g}" for n, v in worst.items()))


def criterion_6():
    worst = max(r.positivity_max for r in study()[0])
    return _line(6, worst <= POSITIVITY_TOL, f"max relative positivity gap {worst:.2e} <= {POSITIVITY_TOL:g}")


def criterion_7():
    results = study()[0]
    counts = [len(r.residuals) for r in results]
    worst = max(max(r.residuals) for r in results)
    ok = all(c == 3 for c in counts) and worst <= RESIDUAL_TOL
    return _line(7, ok, f"max un-split residual {worst:.2e} over {sum(counts)} sampled steps")


def criterion_8():
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        r = cavity_run(h=CAVITY_H, out_dir=tmp)
        secs = time.perf_counter() - t0
        vtk = read_vtk(open(os.path.join(tmp, "cavity_t1.vtk")).read())
    finite = r.finite and all(np.all(np.isfinite(v)) for v in vtk.point_vectors.values())
    s = recirculation_summary(vtk.points, vtk.point_vectors["velocity"])
    div = max(r.div_max, float(np.abs(vtk.cell_scalars["div_u"]).max()))
    ok = secs <= CAVITY_BUDGET and finite and div <= DIV_TOL and s.single_vortex and s.lid_boundary_layer
    return _line(8, ok, f"h={r.h:.4f} {secs:.1f}s finite={finite} div={div:.1e} "
                        f"single_vortex={s.single_vortex} lid_shear={s.lid_shear:.2f}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    sys.exit(0 if all([c() for c in CRITERIA]) else 1)
