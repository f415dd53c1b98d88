"""Subscenario descriptors: goal, safety, precondition and proper response.

``SPEC_S4`` and ``SPEC_S3`` ship with the package.  S1 and S2 have no
built-in descriptor; ``extensions`` lets callers register their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

from .errors import FeatureError
from .kinematics import ScenarioConstants
from .rss import (S3, S4, goal_pred, phi3_dm, phi4, precondition_clauses, safety_clauses)
from .state import WorldState


@dataclass(frozen=True)
class SubscenarioSpec:
    """One row of the subscenario table plus the hooks the runtime needs.

    ``dm_predicate(state, consts)`` is the predicate the decision module keeps
    robustly true, evaluated on an extrapolated snapshot.  ``response_planner``
    computes the baseline controller's schedule when it takes over.
    ``machines`` names the abstract, module-level and manoeuvre-level machines
    (empty for user-registered subscenarios).
    """

    id: str
    goal: Callable[[WorldState, ScenarioConstants], bool]
    safety: Callable[..., Dict[str, bool]]
    precondition: Callable[[WorldState, ScenarioConstants], Dict[str, bool]]
    response_planner: Callable
    dm_predicate: Callable[[WorldState, ScenarioConstants], bool]
    machines: Tuple[str, ...] = ()
    pov_ids: Tuple[int, ...] = ()
    time_limited: bool = False
    lane_change: Tuple[int, int] = (2, 3)
    description: str = field(default="", compare=False)

    def goal_holds(self, state, consts) -> bool:
        return self.goal(state, consts)

    def safety_holds(self, state, consts, a_floor=None) -> bool:
        return all(self.safety(state, consts, a_floor).values())

    def precondition_holds(self, state, consts) -> bool:
        return all(self.precondition(state, consts).values())


def _dm_s4(state: WorldState, consts: ScenarioConstants) -> bool:
    return phi4(state.sv.x, state.sv.v, consts)


def _dm_s3(state: WorldState, consts: ScenarioConstants) -> bool:
    p2 = state.pov(2)
    return phi3_dm(state.sv.x, state.sv.v, p2.x, p2.v, consts)


def _planner_s4(p_x, p_v, post: WorldState, consts):
    from .controller import compute_schedule_s4
    return compute_schedule_s4(p_x, p_v, consts)


def _planner_s3(p_x, p_v, post: WorldState, consts):
    from .controller import compute_schedule_s3
    return compute_schedule_s3(p_x, p_v, post.t_lce, consts)


SPEC_S4 = SubscenarioSpec(
    id=S4,
    goal=lambda s, c: goal_pred(S4, s, c),
    safety=lambda s, c, a_floor=None: safety_clauses(S4, s, c, a_floor),
    precondition=lambda s, c: precondition_clauses(S4, s, c),
    response_planner=_planner_s4,
    dm_predicate=_dm_s4,
    machines=("M40", "M41", "M42"),
    description="stop at the target position in lane 3",
)

SPEC_S3 = SubscenarioSpec(
    id=S3,
    goal=lambda s, c: goal_pred(S3, s, c),
    safety=lambda s, c, a_floor=None: safety_clauses(S3, s, c, a_floor),
    precondition=lambda s, c: precondition_clauses(S3, s, c),
    response_planner=_planner_s3,
    dm_predicate=_dm_s3,
    machines=("M30", "M31", "M32"),
    pov_ids=(2,),
    time_limited=True,
    description="change from lane 2 to lane 3 behind POV2",
)

_REGISTRY: Dict[str, SubscenarioSpec] = {S4: SPEC_S4, S3: SPEC_S3}


def register_spec(spec: SubscenarioSpec, replace: bool = False) -> None:
    if spec.id in _REGISTRY and not replace:
        raise FeatureError(f"subscenario {spec.id} is already registered")
    _REGISTRY[spec.id] = spec


def unregister_spec(id: str) -> None:
    if id in (S3, S4):
        raise FeatureError(f"built-in subscenario {id} cannot be removed")
    _REGISTRY.pop(id, None)


def get_spec(id) -> SubscenarioSpec:
    key = str(getattr(id, "value", id)).upper()
    try:
        return _REGISTRY[key]
    except KeyError:
        raise FeatureError(f"subscenario {id!r} has no registered descriptor") from None


@lru_cache(maxsize=64)
def spec_machine(spec_id: str, level: int, consts: ScenarioConstants, mutations=frozenset()):
    """Machine of a subscenario at ``level`` 0 (abstract) to 2 (manoeuvre), cached."""
    from .machines import build_machine
    spec = get_spec(spec_id)
    if not spec.machines:
        raise FeatureError(f"subscenario {spec_id} has no machines")
    return build_machine(spec.machines[level], consts, mutations)


def concrete_machine(spec: SubscenarioSpec, consts: ScenarioConstants,
                     mutations=frozenset()) -> Optional[object]:
    if not spec.machines:
        return None
    return spec_machine(spec.id, len(spec.machines) - 1, consts, frozenset(mutations))
