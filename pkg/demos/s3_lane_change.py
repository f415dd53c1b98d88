"""
Changing into the shoulder lane behind POV2
===========================================

In S3 the SV moves from lane 2 into lane 3 while POV2 drives ahead in lane 2.
The lane change takes ``t_lc`` cycles; until it completes the SV must keep an
RSS distance to POV2.  A random admissible AC stands in for an arbitrary
driving policy.
"""

from simplex_rss import SPEC_S3, RandomAdmissible, ScenarioConstants, d_rss, run_trace
from simplex_rss.harness import make_initial_state

c = ScenarioConstants()
init = make_initial_state(SPEC_S3, c, x=0, v=8, x2=30, v2=10)
print("initial gap", init.pov(2).x - init.sv.x, ">= dRSS", d_rss(10, 8, c))

for seed in range(3):
    tr = run_trace(SPEC_S3, init, RandomAdmissible(), 50, c, seed=seed)
    print(f"\nseed {seed}: {tr.status} in {tr.cycles} cycles")
    for r in tr.records:
        s = r.state
        gap = s.pov(2).x - s.sv.x
        print(f"  {r.cycle:2d} {s.ctrl:2s} lanes={sorted(s.lanes)} t_lce={s.t_lce} "
              f"v={float(s.sv.v):6.3f} gap={float(gap):7.3f} "
              f"need={float(d_rss(s.pov(2).v, s.sv.v, c)):7.3f}")

# %%
# An initial state whose gap is one centimetre short of the RSS distance is
# rejected up front, naming the failing clause.
from simplex_rss import ContractError

short = make_initial_state(SPEC_S3, c, 0, 8, d_rss(10, 8, c) - c.num("1/100"), 10)
try:
    run_trace(SPEC_S3, short, RandomAdmissible(), 50, c)
except ContractError as exc:
    print("\nrejected:", exc.label)
