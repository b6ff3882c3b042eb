"""Lid-driven MHD cavity: run, write VTK snapshots, summarize the centerline profiles.

Usage: python demos/cavity_flow.py [h] [out_dir]
"""

import sys

import numpy as np

from vemmhd.harness import cavity_run

h = float(sys.argv[1]) if len(sys.argv) > 1 else 0.0354
out = sys.argv[2] if len(sys.argv) > 2 else "cavity_out"

r = cavity_run(h=h, out_dir=out, snapshot_times=(0.25, 0.5))
s = r.summary
print(f"level {r.level}, h={r.h:.4f}, {r.seconds:.1f}s, max div u_h {r.div_max:.1e}, q_h(T)={r.q:.4f}")
print("u1 along x = 0.5:")
for y, u in zip(s.centerline_y[::5], s.u1_vertical[::5]):
    print(f"  y={y:.3f}  u1={u:+.4f}")
print("u2 along y = 0.5:")
for x, u in zip(s.centerline_x[::5], s.u2_horizontal[::5]):
    print(f"  x={x:.3f}  u2={u:+.4f}")
print(f"single primary vortex: {s.single_vortex}, lid shear layer: {s.lid_boundary_layer}")
print("files:", ", ".join(r.files))

# the minimum of u1 on the vertical centerline marks the return flow of the vortex
i = int(np.nanargmin(s.u1_vertical))
print(f"strongest return flow u1={s.u1_vertical[i]:+.4f} at y={s.centerline_y[i]:.3f}")
