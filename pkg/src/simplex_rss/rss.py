"""RSS safety distance, the environment assumption and per-subscenario predicates.

Subscenario S4 is "stop at the target in lane 3"; S3 is "change from lane 2
to lane 3 behind POV2".  The environment assumption (constant-velocity POVs
in fixed lanes) is kept out of the phi predicates and checked separately by
``env_holds``.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional

from .errors import DomainError, FeatureError
from .kinematics import ScenarioConstants, eq, ge, le, lt
from .state import POV_LANES, PovState, WorldState

S1, S2, S3, S4 = "S1", "S2", "S3", "S4"
SUBSCENARIOS = (S1, S2, S3, S4)

LANE_3 = frozenset({3})
LANE_2 = frozenset({2})
LANES_2_3 = frozenset({2, 3})


def _subscenario_id(id) -> str:
    return getattr(id, "value", id)


def d_rss(v_front, v_rear, consts: ScenarioConstants):
    """Minimum gap a follower at ``v_rear`` must keep behind a leader at ``v_front``."""
    if v_front < 0 or v_rear < 0:
        raise DomainError("d_rss needs non-negative velocities")
    gap = v_rear * v_rear / (2 * consts.b_min) - v_front * v_front / (2 * consts.b_max)
    return gap if gap > 0 else gap * 0


def env_holds(povs: Iterable[PovState], consts: ScenarioConstants) -> bool:
    """Environment assumption over the POVs present in the scenario."""
    by_id = {}
    for p in povs:
        if p.id not in POV_LANES:
            return False
        if not (le(consts.v_min, p.v) and le(p.v, consts.v_max)):
            return False
        if p.a != 0 or p.lanes != POV_LANES[p.id]:
            return False
        by_id[p.id] = p
    if 1 in by_id and 2 in by_id and not by_id[2].x > by_id[1].x:
        return False
    return True


def phi4(x_sv, v_sv, consts: ScenarioConstants) -> bool:
    """S4 precondition: the SV can still stop at the target with comfortable braking."""
    return ge(consts.x_tgt - x_sv, v_sv * v_sv / (2 * consts.b_min))


def gap_clause_drss(x_sv, v_sv, x2, v2, consts: ScenarioConstants) -> bool:
    """Gap clause written with ``d_rss`` (workflow form)."""
    return ge(x2 - x_sv, d_rss(v2, v_sv, consts))


def gap_clause_machine(x_sv, v_sv, x2, v2, consts: ScenarioConstants) -> bool:
    """Gap clause written as the polynomial inequality used inside the machines."""
    return le(2 * (x_sv - x2) + v_sv * v_sv / consts.b_min, v2 * v2 / consts.b_max)


def phi3(x_sv, v_sv, x2, v2, consts: ScenarioConstants, workflow: bool = False) -> bool:
    """S3 precondition.

    With ``workflow=True`` the velocity clause ``0 < v_sv <= v2`` is added;
    lane membership and the environment are checked elsewhere.
    """
    if workflow and not (v_sv > 0 and le(v_sv, v2)):
        return False
    return phi4(x_sv, v_sv, consts) and lt(x_sv, x2) and gap_clause_drss(x_sv, v_sv, x2, v2, consts)


def phi3_machine(x_sv, v_sv, x2, v2, consts: ScenarioConstants) -> bool:
    """S3 precondition in the polynomial form carried as a machine invariant."""
    return (phi4(x_sv, v_sv, consts) and lt(x_sv, x2)
            and gap_clause_machine(x_sv, v_sv, x2, v2, consts))


def phi3_dm(x_sv, v_sv, x2, v2, consts: ScenarioConstants) -> bool:
    """Predicate the S3 decision module keeps robustly true.

    The machine-form precondition plus ``v_sv <= v2``; without the speed bound a
    cruising baseline controller can close the gap to POV2.
    """
    return le(v_sv, v2) and phi3_machine(x_sv, v_sv, x2, v2, consts)


def _pov2(state: WorldState) -> PovState:
    p = state.pov(2)
    if p is None:
        raise DomainError("subscenario S3 needs POV2")
    return p


def goal_pred(id, state: WorldState, consts: ScenarioConstants) -> bool:
    id = _subscenario_id(id)
    if id == S4:
        return eq(state.sv.x, consts.x_tgt) and eq(state.sv.v, 0 * state.sv.v)
    if id == S3:
        return state.lanes == LANE_3
    raise FeatureError(f"goal predicate for {id!r} is not supported")


def safety_clauses(id, state: WorldState, consts: ScenarioConstants,
                   a_floor=None) -> Dict[str, bool]:
    """Each clause of the subscenario safety condition, by name.

    ``a_floor`` is the lowest admissible acceleration; it defaults to
    ``-b_min`` (the baseline controller's band).
    """
    id = _subscenario_id(id)
    sv = state.sv
    if a_floor is None:
        a_floor = -consts.b_min
    accel = le(a_floor, sv.a_cmd) and le(sv.a_cmd, consts.a_max)
    if id == S4:
        return {
            "lanes": state.lanes == LANE_3,
            "v_band": le(0, sv.v) and le(sv.v, consts.v_max),
            "accel_band": accel,
        }
    if id == S3:
        p2 = _pov2(state)
        gap = sv.v >= 0 and gap_clause_drss(sv.x, sv.v, p2.x, p2.v, consts)
        # the entry snapshot (t_lce = 0) is still in lane 2 as the precondition demands
        entry = state.lanes == LANE_2 and state.t_lce == 0
        return {
            "lanes": entry or state.lanes in (LANE_3, LANES_2_3),
            "v_band": le(0, sv.v) and le(sv.v, p2.v),
            "rss_gap_pov2": gap,
            "accel_band": accel,
        }
    raise FeatureError(f"safety predicate for {id!r} is not supported")


def safety_pred(id, state: WorldState, consts: ScenarioConstants, a_floor=None) -> bool:
    return all(safety_clauses(id, state, consts, a_floor).values())


def precondition_clauses(id, state: WorldState, consts: ScenarioConstants,
                         workflow: bool = False) -> Dict[str, bool]:
    """Clauses of the subscenario precondition, by name (environment excluded).

    For S3 the default is the form the machines keep invariant (polynomial gap
    clause and ``v <= v2``); ``workflow=True`` uses the d_rss form with
    ``0 < v <= v2``.
    """
    id = _subscenario_id(id)
    sv = state.sv
    if id == S4:
        return {"lanes": state.lanes == LANE_3, "phi4": phi4(sv.x, sv.v, consts)}
    if id == S3:
        p2 = _pov2(state)
        clauses = {
            "lanes": state.lanes == LANE_2,
            "phi4": phi4(sv.x, sv.v, consts),
            "behind_pov2": lt(sv.x, p2.x),
        }
        if workflow:
            clauses["v_band"] = sv.v > 0 and le(sv.v, p2.v)
            clauses["rss_gap_pov2"] = sv.v >= 0 and gap_clause_drss(sv.x, sv.v, p2.x, p2.v, consts)
        else:
            clauses["v_le_v2"] = le(sv.v, p2.v)
            clauses["rss_gap_pov2"] = gap_clause_machine(sv.x, sv.v, p2.x, p2.v, consts)
        return clauses
    raise FeatureError(f"precondition for {id!r} is not supported")


def failing_clause(clauses: Dict[str, bool]) -> Optional[str]:
    for name, ok in clauses.items():
        if not ok:
            return name
    return None
