"""Structural support for subscenarios S1 (get ready to merge) and S2 (change to lane 2).

Only executors and predicates ship here.  The S1/S2 preconditions and
schedule formulas have no closed form in this package; callers supply them
as hooks through ``make_hook_spec``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

from .errors import ContractError, ModelError, PreconditionError
from .kinematics import ScenarioConstants, VehicleKinematics, eq, ge, le, plan_cycle
from .rss import S1, S2, d_rss, gap_clause_drss
from .scenarios import SubscenarioSpec
from .state import BCSchedule, Ctrl, PovState, WorldState


class Phase(str, enum.Enum):
    ACCEL = "ACCEL"
    CRUISE = "CRUISE"
    BRAKE = "BRAKE"

    def __str__(self):
        return self.value


_RANK = {Phase.ACCEL: 0, Phase.CRUISE: 1, Phase.BRAKE: 2}


@dataclass(frozen=True)
class MultiPhasePlan:
    """Proper response as a sequence of (manoeuvre, duration) pairs.

    Manoeuvres must appear in the order accelerate, cruise, brake; a kind may
    be repeated or skipped.  Durations are in time units (cycles when
    ``dt = 1``).
    """

    phases: Tuple[Tuple[Phase, object], ...] = ()
    last_response_id: str = ""

    def __post_init__(self):
        phases = tuple((Phase(k), d) for k, d in self.phases)
        rank = -1
        for kind, duration in phases:
            if _RANK[kind] < rank:
                raise ContractError(f"phase {kind} out of order in {phases}", label="phase_order")
            rank = _RANK[kind]
            if duration < 0 or not math.isfinite(float(duration)):
                raise ContractError(f"phase {kind} has bad duration {duration}", label="duration")
        object.__setattr__(self, "phases", phases)

    def total(self, kind: Phase):
        out = 0
        for k, d in self.phases:
            if k == kind:
                out = out + d
        return out

    @property
    def empty(self) -> bool:
        return all(d <= 0 for _, d in self.phases)

    def to_schedule(self) -> BCSchedule:
        return BCSchedule(self.total(Phase.ACCEL), self.total(Phase.CRUISE),
                          self.total(Phase.BRAKE), self.last_response_id)

    @classmethod
    def from_schedule(cls, plan: BCSchedule) -> "MultiPhasePlan":
        phases = [(Phase.ACCEL, plan.t_accel), (Phase.CRUISE, plan.t_cruise),
                  (Phase.BRAKE, plan.t_brake)]
        return cls(tuple((k, d) for k, d in phases if d > 0), plan.last_response_id)

    def columns(self) -> Dict[str, object]:
        """Flat trace columns: one remaining duration per manoeuvre."""
        return {"plan_accel": self.total(Phase.ACCEL), "plan_cruise": self.total(Phase.CRUISE),
                "plan_brake": self.total(Phase.BRAKE), "plan_id": self.last_response_id}


def plan_executor_step(state: WorldState, plan: MultiPhasePlan, consts: ScenarioConstants
                       ) -> Tuple[VehicleKinematics, MultiPhasePlan]:
    """Run one cycle of ``plan`` from the SV state of ``state``.

    A phase that ends inside the cycle hands the rest of the cycle to the
    next one.  Acceleration is capped at ``v_max``; braking holds at rest.
    Fully consumed phases are dropped from the returned plan.
    """
    if state.ctrl != Ctrl.BC:
        raise PreconditionError("plan_executor_step runs only under the BC", clause="ctrl")
    x, v = state.sv.x, state.sv.v
    step = plan_cycle(x, v, plan.total(Phase.ACCEL), plan.total(Phase.CRUISE),
                      plan.total(Phase.BRAKE), consts)
    rest = dict(zip(Phase, step[2:]))
    kin = VehicleKinematics(step.x, step.v, (step.v - v) / consts.dt)
    remaining = tuple((k, rest[k]) for k in Phase if rest[k] > 0)
    return kin, MultiPhasePlan(remaining, plan.last_response_id)


# -- S1/S2 predicates --------------------------------------------------------------

def _need(state: WorldState, id: int) -> PovState:
    p = state.pov(id)
    if p is None:
        raise ModelError(f"the predicate needs POV{id}, which the state does not carry")
    return p


def _accel_band(state, consts, a_floor):
    a = state.sv.a_cmd
    floor = -consts.b_min if a_floor is None else a_floor
    return le(floor, a) and le(a, consts.a_max)


def s2_safety_clauses(state: WorldState, consts: ScenarioConstants,
                      a_floor=None) -> Dict[str, bool]:
    p2, p3 = _need(state, 2), _need(state, 3)
    sv = state.sv
    v_ok = le(0, sv.v) and le(sv.v, p2.v)
    return {
        "lanes": state.lanes in (frozenset({2}), frozenset({1, 2})),
        "v_band": v_ok,
        "rss_gap_pov2": sv.v >= 0 and gap_clause_drss(sv.x, sv.v, p2.x, p2.v, consts),
        "rss_gap_pov3": sv.v >= 0 and gap_clause_drss(sv.x, sv.v, p3.x, p3.v, consts),
        "accel_band": _accel_band(state, consts, a_floor),
    }


def s2_safety_pred(state: WorldState, consts: ScenarioConstants, a_floor=None) -> bool:
    """Safety of S2: lane 2 or changing from 1 to 2, below POV2's speed, RSS gaps to POV2 and POV3."""
    return all(s2_safety_clauses(state, consts, a_floor).values())


def s1_safety_clauses(state: WorldState, consts: ScenarioConstants,
                      a_floor=None) -> Dict[str, bool]:
    p3 = _need(state, 3)
    sv = state.sv
    return {
        "lanes": state.lanes == frozenset({1}),
        "rss_gap_pov3": sv.v >= 0 and gap_clause_drss(sv.x, sv.v, p3.x, p3.v, consts),
        "v_band": le(0, sv.v) and le(sv.v, consts.v_max),
        "accel_band": _accel_band(state, consts, a_floor),
    }


def s1_safety_pred(state: WorldState, consts: ScenarioConstants, a_floor=None) -> bool:
    return all(s1_safety_clauses(state, consts, a_floor).values())


def goal1_pred(state: WorldState, consts: ScenarioConstants) -> bool:
    """Merge-ready: RSS gaps behind POV2 and ahead of POV1, matching POV2's speed.

    No shipped schedule targets this condition.
    """
    p1, p2 = _need(state, 1), _need(state, 2)
    sv = state.sv
    if sv.v < 0:
        return False
    ahead = ge(p2.x - sv.x, d_rss(p2.v, sv.v, consts))
    behind = ge(sv.x - p1.x, d_rss(sv.v, p1.v, consts))
    return ahead and behind and eq(p2.v, sv.v)


def goal2_pred(state: WorldState, consts: ScenarioConstants) -> bool:
    return state.lanes == frozenset({2})


# -- hook specs ----------------------------------------------------------------------

def make_hook_spec(id: str, dm_predicate: Callable, response_planner: Callable,
                   precondition: Callable, description: str = "") -> SubscenarioSpec:
    """Descriptor for S1 or S2 with caller-supplied decision and schedule hooks.

    ``dm_predicate(state, consts)`` is the predicate the decision module keeps
    robustly true; ``response_planner(p_x, p_v, post, consts)`` returns a
    ``BCSchedule`` (use ``MultiPhasePlan.to_schedule`` for multi-phase plans);
    ``precondition(state, consts)`` returns named clauses.  Register the
    result with ``scenarios.register_spec`` to run it through the harness.
    """
    id = str(getattr(id, "value", id)).upper()
    for name, hook in (("dm_predicate", dm_predicate), ("response_planner", response_planner),
                       ("precondition", precondition)):
        if not callable(hook):
            raise ContractError(f"{id}: hook {name} must be callable", label=name)
    if id == S2:
        return SubscenarioSpec(
            id=S2, goal=goal2_pred, safety=s2_safety_clauses, precondition=precondition,
            response_planner=response_planner, dm_predicate=dm_predicate,
            pov_ids=(2, 3), time_limited=True, lane_change=(1, 2),
            description=description or "change from lane 1 to lane 2")
    if id == S1:
        return SubscenarioSpec(
            id=S1, goal=goal1_pred, safety=s1_safety_clauses, precondition=precondition,
            response_planner=response_planner, dm_predicate=dm_predicate,
            pov_ids=(1, 2, 3), time_limited=False,
            description=description or "get ready to merge between POV1 and POV2")
    raise ContractError(f"hook specs exist for S1 and S2 only, not {id!r}", label="id")
