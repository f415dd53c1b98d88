"""
Stopping at the pull-over target
================================

The SV starts at rest in lane 3 and the advanced controller (AC) floors the
accelerator every cycle.  The decision module hands control to the baseline
controller (BC) just before the adversary could make a stop at the target
impossible, and the BC's cruise-then-brake schedule lands exactly on
``(x_tgt, 0)`` in exact arithmetic.
"""

from simplex_rss import SPEC_S4, MaxAccel, ScenarioConstants, build_machine, run_trace
from simplex_rss.harness import make_initial_state, trace_to_string
from simplex_rss.machines import to_valuation

c = ScenarioConstants()           # x_tgt=100, b_min=2, b_max=4, a_max=1, v_max=20
init = make_initial_state(SPEC_S4, c, x=0, v=0)
trace = run_trace(SPEC_S4, init, MaxAccel(), max_cycles=100, consts=c)

print(trace_to_string(trace, "csv"))
print("status:", trace.status, "after", trace.cycles, "cycles")

# %%
# The handover cycle.  ``t_cruise`` and ``t_brake`` are the remaining
# durations of the BC schedule, computed at the AC's proposal.
handover = next(r for r in trace.records if r.decision == "switch")
print("switch at cycle", handover.cycle, "with", handover.state.plan)

# %%
# Every BC cycle satisfies the manoeuvre-level identities of M42, checked
# here with exact rationals.
m42 = build_machine("M42", c)
for rec in trace.records:
    if rec.state.ctrl == "BC":
        assert not m42.violated_invariants(to_valuation(m42, rec.state)), rec.cycle
print("M42 invariants hold on every BC cycle")

# %%
# The same run in float mode ends within rounding of the target.
f = ScenarioConstants(arith="float")
ft = run_trace(SPEC_S4, make_initial_state(SPEC_S4, f, 0.0, 0.0), MaxAccel(), 100, f)
print("float final x - x_tgt =", ft.final.sv.x - 100)
