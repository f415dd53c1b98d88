"""Simplex runtime: advanced-controller strategies, baseline controller, decision module.

One call of ``simplex_step`` is one monitor-decide-control cycle.  The
decision module looks two cycles ahead at maximal acceleration: the advanced
controller (AC) keeps control only while the subscenario precondition still
holds at that extrapolated point, and the baseline controller (BC) hands back
only when it holds again.
"""

from __future__ import annotations

import csv
import enum
import random
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

from .errors import ConfigError, DomainError, PreconditionError
from .kinematics import (EXACT, ScenarioConstants, VehicleKinematics, admissible_next,
                         extrapolate_max_accel, plan_cycle)
from .rss import phi4
from .scenarios import SubscenarioSpec, spec_machine
from .state import BCSchedule, Ctrl, WorldState, lane_change_lanes


@dataclass(frozen=True)
class AcProposal:
    """Next position and velocity requested by the advanced controller."""

    p_x: object
    p_v: object


class Decision(str, enum.Enum):
    STAY = "stay"
    SWITCH = "switch"

    def __str__(self):
        return self.value


SUBSTITUTE = "substitute"
CLIP = "clip"
FAILURE_POLICIES = (SUBSTITUTE, CLIP)


# -- advanced-controller strategies -------------------------------------------

class AcStrategy:
    """Black-box advanced controller.  Subclasses implement ``propose``.

    ``rng`` is a ``random.Random`` owned by the trace; strategies must not
    use any other source of randomness.
    """

    name = "abstract"

    def propose(self, state: WorldState, consts: ScenarioConstants,
                rng: random.Random) -> AcProposal:
        raise NotImplementedError

    def reset(self) -> None:
        """Forget per-trace state (scripted strategies rewind)."""


class MaxAccel(AcStrategy):
    """Accelerate at ``a_max`` every cycle, saturating at ``v_max``."""

    name = "max-accel"

    def propose(self, state, consts, rng):
        x, v = state.sv.x, state.sv.v
        step = plan_cycle(x, v, consts.dt, 0, 0, consts)
        return AcProposal(step.x, step.v)


class Cruise(AcStrategy):
    name = "cruise"

    def propose(self, state, consts, rng):
        x, v = state.sv.x, state.sv.v
        return AcProposal(x + v * consts.dt, v)


class RandomAdmissible(AcStrategy):
    """Uniform proposal in the physical box, restricted to ``0 <= p_v <= v_max``.

    Values are drawn on a rational grid of denominator ``denominator`` so that
    exact-mode traces stay exact.
    """

    name = "random-admissible"

    def __init__(self, denominator: int = 64):
        if denominator < 1:
            raise ConfigError("denominator must be >= 1", field="denominator")
        self.denominator = denominator

    def _uniform(self, lo, hi, consts, rng):
        d = self.denominator
        if consts.arith != EXACT:
            return lo + (hi - lo) * rng.random()
        a = -((-lo * d) // 1)
        b = (hi * d) // 1
        if a > b:
            return lo
        return consts.num(rng.randint(int(a), int(b))) / d

    def propose(self, state, consts, rng):
        x, v, dt = state.sv.x, state.sv.v, consts.dt
        v_lo = max(v - consts.b_max * dt, 0 * v)
        v_hi = min(v + consts.a_max * dt, consts.v_max)
        p_v = self._uniform(v_lo, v_hi, consts, rng) if v_lo <= v_hi else v_hi
        x_hi = x + v * dt + consts.a_max * dt * dt / 2
        p_x = self._uniform(x, x_hi, consts, rng)
        return AcProposal(p_x, p_v)


class Scripted(AcStrategy):
    """Replays a fixed proposal list, then cruises."""

    name = "scripted"

    def __init__(self, proposals):
        self.proposals = list(proposals)
        self._i = 0

    @classmethod
    def from_csv(cls, path) -> "Scripted":
        """Read ``p_x,p_v`` rows (header optional) from a CSV file."""
        rows = []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if i == 0 and row[0].strip() == "p_x":
                    continue
                if len(row) < 2:
                    raise ConfigError(f"{path}:{i + 1}: expected p_x,p_v", field="script")
                rows.append((row[0].strip(), row[1].strip()))
        return cls(rows)

    def reset(self):
        self._i = 0

    def propose(self, state, consts, rng):
        if self._i < len(self.proposals):
            p_x, p_v = self.proposals[self._i]
            self._i += 1
            return AcProposal(consts.num(p_x), consts.num(p_v))
        return Cruise().propose(state, consts, rng)


STRATEGIES: Dict[str, Callable[..., AcStrategy]] = {
    MaxAccel.name: MaxAccel,
    Cruise.name: Cruise,
    RandomAdmissible.name: RandomAdmissible,
    Scripted.name: Scripted,
}


def make_strategy(name: str, **params) -> AcStrategy:
    """Instantiate a built-in strategy by name (``scripted`` takes ``path`` or ``proposals``)."""
    if name not in STRATEGIES:
        raise ConfigError(f"unknown AC strategy {name!r}; expected one of {', '.join(STRATEGIES)}",
                          field="strategy")
    if name == Scripted.name and "path" in params:
        return Scripted.from_csv(params["path"])
    try:
        return STRATEGIES[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}", field="strategy") from exc


# -- baseline controller --------------------------------------------------------

def time_to_cruise_s4(p_x, p_v, consts: ScenarioConstants):
    """Cruise time after which braking at ``b_min`` stops exactly at the target."""
    return (consts.x_tgt - p_x) / p_v - p_v / (2 * consts.b_min)


def compute_schedule_s4(p_x, p_v, consts: ScenarioConstants) -> BCSchedule:
    """Cruise-then-brake schedule that ends at ``(x_tgt, 0)``."""
    if p_v <= 0:
        raise DomainError("compute_schedule_s4 needs p_v > 0")
    t_cruise = time_to_cruise_s4(p_x, p_v, consts)
    if t_cruise < 0:
        if not phi4(p_x, p_v, consts):
            raise PreconditionError("phi4 does not hold at the proposal", clause="phi4")
        # float rounding on the phi4 boundary
        t_cruise = 0 * t_cruise
    return BCSchedule(0 * t_cruise, t_cruise, p_v / consts.b_min, "alpha4")


def brake_time_s3_formula(p_x, p_v, t_lce, consts: ScenarioConstants):
    """Unclamped braking time of the S3 response; negative means no braking is needed."""
    if p_v <= 0:
        raise DomainError("the S3 braking time needs p_v > 0")
    return ((consts.t_lc - t_lce) * consts.dt + p_v / (2 * consts.b_min)
            + (p_x - consts.x_tgt) / p_v)


def compute_schedule_s3(p_x, p_v, t_lce, consts: ScenarioConstants) -> BCSchedule:
    """Cruise-then-brake schedule filling the rest of the lane change.

    ``t_lce`` is the elapsed lane-change time of the state the schedule starts
    from.  Braking lasts ``max(0, formula)`` and cruising covers the rest of
    the remaining time ``(t_lc - t_lce) * dt``, which is the longest cruise
    that still lets a later S4 response stop at the target.
    """
    if p_v <= 0:
        raise DomainError("compute_schedule_s3 needs p_v > 0")
    cruise_s4 = time_to_cruise_s4(p_x, p_v, consts)
    if cruise_s4 < 0:
        raise PreconditionError("phi4 does not hold at the proposal", clause="phi4")
    remaining = (consts.t_lc - t_lce) * consts.dt
    if remaining < 0:
        raise PreconditionError("lane change already over", clause="no_overtime")
    t_brake = brake_time_s3_formula(p_x, p_v, t_lce, consts)
    if t_brake < 0:
        t_brake = 0 * t_brake
    return BCSchedule(0 * t_brake, remaining - t_brake, t_brake, "alpha3")


def stopped_schedule(spec: SubscenarioSpec, post: WorldState, consts) -> BCSchedule:
    """Schedule taken over at standstill: hold for the rest of the subscenario."""
    zero = consts.num(0)
    if spec.time_limited:
        return BCSchedule(zero, zero, (consts.t_lc - post.t_lce) * consts.dt, "hold")
    return BCSchedule(zero, zero, zero, "hold")


def bc_step(state: WorldState, plan: BCSchedule, consts: ScenarioConstants):
    """One cycle of the baseline controller's schedule.

    Returns the new ``VehicleKinematics`` (``a_cmd`` is the mean acceleration
    of the cycle) and the remaining schedule.
    """
    x, v = state.sv.x, state.sv.v
    step = plan_cycle(x, v, plan.t_accel, plan.t_cruise, plan.t_brake, consts)
    a_cmd = (step.v - v) / consts.dt
    return (VehicleKinematics(step.x, step.v, a_cmd),
            BCSchedule(step.t_accel, step.t_cruise, step.t_brake, plan.last_response_id))


# -- decision module ------------------------------------------------------------

def advance_environment(state: WorldState, consts: ScenarioConstants, k: int = 1,
                        time_limited: bool = True, lane_change=(2, 3)) -> WorldState:
    """POVs move ``k`` cycles at constant speed; the lane-change timer advances."""
    h = k * consts.dt
    povs = tuple(replace(p, x=p.x + p.v * h) for p in state.povs)
    if not time_limited:
        return state.replace(povs=povs)
    t = state.t_lce + k
    t = t if t < consts.t_lc else consts.t_lc
    lanes = lane_change_lanes(t, consts.t_lc, *lane_change)
    return state.replace(povs=povs, t_lce=t, lanes=lanes)


def lookahead_state(state: WorldState, consts: ScenarioConstants, k: int,
                    time_limited: bool = False, lane_change=(2, 3)) -> WorldState:
    """Snapshot after ``k`` cycles of maximal acceleration by the SV."""
    x, v = extrapolate_max_accel(state.sv.x, state.sv.v, consts, k)
    moved = advance_environment(state, consts, k, time_limited, lane_change)
    return moved.replace(sv=VehicleKinematics(x, v, consts.a_max))


def dm_decide(state: WorldState, spec: SubscenarioSpec, consts: ScenarioConstants,
              lookahead: int = 2) -> Decision:
    """Switch decision taken on the pre-cycle state.

    Under the AC: switch iff the precondition may fail after ``lookahead``
    cycles of maximal acceleration.  Under the BC: switch back iff it surely
    holds there.
    """
    ahead = lookahead_state(state, consts, lookahead, spec.time_limited,
                            spec.lane_change)
    safe = spec.dm_predicate(ahead, consts)
    if state.ctrl == Ctrl.AC:
        return Decision.STAY if safe else Decision.SWITCH
    return Decision.SWITCH if safe else Decision.STAY


def switching_holds(state: WorldState, spec: SubscenarioSpec, consts) -> bool:
    """The switching invariant: the precondition survives one cycle of maximal acceleration."""
    return spec.dm_predicate(lookahead_state(state, consts, 1, spec.time_limited,
                                                   spec.lane_change), consts)


# -- one Simplex cycle ------------------------------------------------------------

@dataclass(frozen=True)
class CycleOutcome:
    state: WorldState
    event: str
    decision: Decision
    proposal: Optional[AcProposal] = None
    rejected: Optional[str] = None


def _proposal_guard(spec: SubscenarioSpec, consts):
    m = spec_machine(spec.id, 0, consts)
    return m, m.event("run")


def validate_proposal(state: WorldState, proposal: AcProposal, spec: SubscenarioSpec,
                      consts: ScenarioConstants) -> Optional[str]:
    """Label of the first abstract run-guard atom the proposal breaks, else ``None``."""
    from .machines import to_valuation
    if not spec.machines:
        cur = state.sv
        ok = admissible_next(cur, proposal.p_x, proposal.p_v, consts) and proposal.p_v >= 0
        return None if ok else "physical_constr"
    m, run = _proposal_guard(spec, consts)
    return run.failing_guard(to_valuation(m, state), {"p_x": proposal.p_x, "p_v": proposal.p_v})


def _clip(state, proposal, consts):
    x, v, dt = state.sv.x, state.sv.v, consts.dt
    v_lo = max(v - consts.b_max * dt, 0 * v)
    v_hi = min(v + consts.a_max * dt, consts.v_max)
    x_hi = x + v * dt + consts.a_max * dt * dt / 2
    return AcProposal(min(max(proposal.p_x, x), x_hi), min(max(proposal.p_v, v_lo), v_hi))


def bc_event_name(spec: SubscenarioSpec, state: WorldState, consts, target: Ctrl) -> str:
    """Name of the manoeuvre-level event a BC cycle corresponds to."""
    tc, v = state.plan.t_cruise, state.sv.v
    if tc >= consts.dt:
        kind = "cruise"
    elif v == 0:
        kind = "stop"
    elif tc > 0 and not spec.time_limited:
        kind = "cruise_brake"
    else:
        kind = "brake"
    return f"BC_{kind}->{target.value}"


def simplex_step(state: WorldState, ac: AcStrategy, spec: SubscenarioSpec,
                 consts: ScenarioConstants, rng: random.Random,
                 policy: str = SUBSTITUTE) -> CycleOutcome:
    """One monitor-decide-control cycle with full bookkeeping."""
    if policy not in FAILURE_POLICIES:
        raise ConfigError(f"unknown proposal policy {policy!r}", field="policy")
    decision = dm_decide(state, spec, consts)
    env = advance_environment(state, consts, 1, spec.time_limited, spec.lane_change)
    if state.ctrl == Ctrl.AC:
        proposal = ac.propose(state, consts, rng)
        proposal = AcProposal(consts.num(proposal.p_x), consts.num(proposal.p_v))
        rejected = validate_proposal(state, proposal, spec, consts)
        if rejected is not None:
            if policy == CLIP:
                proposal = _clip(state, proposal, consts)
            if policy == SUBSTITUTE or validate_proposal(state, proposal, spec, consts):
                proposal = Cruise().propose(state, consts, rng)
        sv = VehicleKinematics(proposal.p_x, proposal.p_v,
                               (proposal.p_v - state.sv.v) / consts.dt)
        post = env.replace(sv=sv, actor=Ctrl.AC)
        if decision == Decision.STAY:
            return CycleOutcome(post, "AC_run->AC", decision, proposal, rejected)
        if proposal.p_v > 0:
            plan = spec.response_planner(proposal.p_x, proposal.p_v, post, consts)
            event = "AC_run->BC"
        else:
            plan = stopped_schedule(spec, post, consts)
            event = "AC_stop->BC"
        post = post.replace(ctrl=Ctrl.BC, v_bc0=proposal.p_v, plan=plan)
        return CycleOutcome(post, event, decision, proposal, rejected)
    target = Ctrl.AC if decision == Decision.SWITCH else Ctrl.BC
    event = bc_event_name(spec, state, consts, target)
    sv, plan = bc_step(state, state.plan, consts)
    post = env.replace(sv=sv, plan=plan, ctrl=target, actor=Ctrl.BC)
    return CycleOutcome(post, event, decision)


def simplex_cycle(state: WorldState, ac: AcStrategy, spec: SubscenarioSpec,
                  consts: ScenarioConstants, seed=0, policy: str = SUBSTITUTE) -> WorldState:
    """One cycle; ``seed`` may be an int or a ``random.Random`` to draw from."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return simplex_step(state, ac, spec, consts, rng, policy).state


def initial_control(state: WorldState, spec: SubscenarioSpec, consts) -> WorldState:
    """Pick the controller for an initial snapshot.

    The AC starts if the switching invariant holds; otherwise the BC takes
    over at once with a schedule computed from the current state.
    """
    if switching_holds(state, spec, consts):
        return state.replace(ctrl=Ctrl.AC)
    v = state.sv.v
    if v > 0:
        plan = spec.response_planner(state.sv.x, v, state, consts)
    else:
        plan = stopped_schedule(spec, state, consts)
    return state.replace(ctrl=Ctrl.BC, v_bc0=v, plan=plan)


def trace_rng(seed, trace_index: int = 0) -> random.Random:
    """Per-trace generator of the documented seed-splitting scheme."""
    return random.Random(f"{seed}/trace/{trace_index}")


__all__: List[str] = [
    "AcProposal", "AcStrategy", "CLIP", "Cruise", "CycleOutcome", "Decision", "MaxAccel",
    "RandomAdmissible", "STRATEGIES", "SUBSTITUTE", "Scripted", "advance_environment",
    "bc_event_name", "bc_step", "brake_time_s3_formula", "compute_schedule_s3",
    "compute_schedule_s4", "dm_decide", "initial_control", "lookahead_state", "make_strategy",
    "simplex_cycle", "simplex_step", "stopped_schedule", "switching_holds",
    "time_to_cruise_s4", "trace_rng", "validate_proposal",
]
