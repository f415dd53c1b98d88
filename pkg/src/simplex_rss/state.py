"""World snapshot types shared by the predicates, machines, controller and harness."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from .kinematics import Number, VehicleKinematics


class Ctrl(str, enum.Enum):
    AC = "AC"
    BC = "BC"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PovState:
    """A principal other vehicle.  POVs never accelerate."""

    id: int
    x: Number
    v: Number
    a: Number = 0
    lanes: frozenset = frozenset()


#: lane sets fixed by the environment assumption
POV_LANES = {1: frozenset({2}), 2: frozenset({2}), 3: frozenset({1})}


def make_pov(id: int, x, v, a=0) -> PovState:
    return PovState(id=id, x=x, v=v, a=a, lanes=POV_LANES[id])


@dataclass(frozen=True)
class BCSchedule:
    """Remaining durations of the baseline controller's proper response.

    Phases run in the order accelerate, cruise, brake.  Durations are in time
    units, which equal cycles when ``dt = 1``.
    """

    t_accel: Number = 0
    t_cruise: Number = 0
    t_brake: Number = 0
    last_response_id: str = ""

    @property
    def empty(self) -> bool:
        return self.t_accel <= 0 and self.t_cruise <= 0 and self.t_brake <= 0


@dataclass(frozen=True)
class WorldState:
    """One per-cycle snapshot of the subject vehicle, the POVs and the controller.

    ``actor`` records which controller produced ``sv`` (``None`` for an
    initial state); the admissible acceleration band depends on it.
    """

    sv: VehicleKinematics
    povs: Tuple[PovState, ...] = ()
    lanes: frozenset = frozenset({3})
    t_lce: Number = 0
    ctrl: Ctrl = Ctrl.AC
    v_bc0: Number = 0
    plan: BCSchedule = field(default_factory=BCSchedule)
    actor: Optional[Ctrl] = None

    def pov(self, id: int) -> Optional[PovState]:
        for p in self.povs:
            if p.id == id:
                return p
        return None

    def replace(self, **changes) -> "WorldState":
        return replace(self, **changes)


def lane_change_lanes(t_lce, t_lc, source: int = 2, dest: int = 3) -> frozenset:
    """SV lane set while changing from ``source`` to ``dest`` (default 2 to 3)."""
    if t_lce <= 0:
        return frozenset({source})
    if t_lce < t_lc:
        return frozenset({source, dest})
    return frozenset({dest})
