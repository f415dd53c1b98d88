"""
Multi-phase responses for S1 and S2
===================================

S1 and S2 need responses that may accelerate before cruising and braking.
``MultiPhasePlan`` carries such a schedule and ``plan_executor_step`` runs
one cycle of it, splitting a cycle across phases when one ends mid-cycle.
"""

from simplex_rss import ScenarioConstants, VehicleKinematics, WorldState
from simplex_rss.controller import advance_environment
from simplex_rss.extensions import MultiPhasePlan, Phase, plan_executor_step, s2_safety_clauses
from simplex_rss.state import Ctrl, make_pov

c = ScenarioConstants()
plan = MultiPhasePlan(((Phase.ACCEL, c.num("3/2")), (Phase.CRUISE, 2), (Phase.BRAKE, 6)), "demo")
state = WorldState(sv=VehicleKinematics(c.num(0), c.num(10)), ctrl=Ctrl.BC,
                   lanes=frozenset({1, 2}),
                   povs=(make_pov(2, c.num(80), c.num(12)), make_pov(3, c.num(60), c.num(11))))

while not plan.empty:
    kin, plan = plan_executor_step(state, plan, c)
    # POVs keep their speed; the lane-change timer is not modelled here
    state = advance_environment(state, c, 1, time_limited=False).replace(sv=kin)
    clauses = s2_safety_clauses(state, c)
    print(f"x={str(kin.x):>8s} v={str(kin.v):>5s} remaining={plan.columns()} "
          f"unsafe={[k for k, ok in clauses.items() if not ok]}")
