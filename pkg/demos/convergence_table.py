"""Manufactured-solution error table on one mesh family.

Usage: python demos/convergence_table.py [family] [max_level]
"""

import sys

from vemmhd.harness import convergence_study
from vemmhd.io import write_table

family = sys.argv[1] if len(sys.argv) > 1 else "square"
top = int(sys.argv[2]) if len(sys.argv) > 2 else 4


def progress(r):
    e = r.report
    print(f"level {e.level}: h={e.h:.4f} u_L2={e.u_L2:.3e} b_L2={e.b_L2:.3e} div={r.div_max:.1e}", flush=True)


results, rates = convergence_study(family, range(1, top + 1), progress=progress)
print()
print(write_table([r.report for r in results], rates, label=family))
