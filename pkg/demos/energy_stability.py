"""Unforced decay with large time steps: the telescoped energy never increases.

Also shows the sign-flipped control, which breaks down or gains energy.
"""

from vemmhd.harness import stability_run

for factor in (1.0, 10.0, 100.0):
    r = stability_run("voronoi", level=2, factor=factor, steps=50)
    print(f"dt={factor:g}h: E {r.telescoped[0]:.6e} -> {r.telescoped[-1]:.6e}, "
          f"max relative increase {r.max_increase:.1e}, first-step balance gap {r.bdf1_gap:.1e}")

bad = stability_run("voronoi", level=2, factor=1.0, steps=50, negative_control=True)
print(f"sign-flipped control: monotone={bad.monotone}, breakdown={bad.breakdown}")
