"""
Mapping where S4 starts succeed
===============================

A lattice over initial position and speed.  Points outside phi4 (the SV can
no longer stop at the target with comfortable braking) are skipped; every
other point runs against the max-accel adversary.  The map is drawn in text;
the CSV written alongside is the input for external plotting.
"""

import io

from simplex_rss import SPEC_S4, Lattice, MaxAccel, ScenarioConstants, sweep_initial_states
from simplex_rss.harness import frange, sweep_summary, write_sweep_csv

c = ScenarioConstants()
grid = Lattice(frange(0, 100, 5, c), frange(0, 20, 1, c))
report = sweep_initial_states(SPEC_S4, grid, MaxAccel(), c)
print(sweep_summary(report))

status = {(p.x, p.v): p.status for p in report.points}
mark = {"GOAL": "o", "VIOLATION": "X", "TIMEOUT": "T", "STALLED": "S"}
print("\nrows: v from 20 down to 0; columns: x from 0 to 100 in steps of 5")
for v in reversed(grid.v):
    row = "".join(mark.get(status.get((x, v)), ".") for x in grid.x)
    print(f"{int(v):5d}  {row}")
print("o = GOAL, . = outside phi4 (skipped)")

buf = io.StringIO()
write_sweep_csv(report, buf)
print("\nfirst CSV rows:\n" + "\n".join(buf.getvalue().splitlines()[:4]))
