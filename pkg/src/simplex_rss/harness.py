"""Trace runner, per-cycle violation detection and initial-state sweeps."""

from __future__ import annotations

import csv
import enum
import io
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

from .controller import (SUBSTITUTE, AcProposal, AcStrategy, CycleOutcome, initial_control,
                         simplex_step, trace_rng)
from .errors import ContractError
from .kinematics import EXACT, ScenarioConstants, VehicleKinematics
from .rss import env_holds, failing_clause
from .scenarios import SubscenarioSpec, concrete_machine
from .state import Ctrl, WorldState, lane_change_lanes, make_pov


class ViolationKind(str, enum.Enum):
    INVARIANT = "INVARIANT"
    SAFETY = "SAFETY"
    COLLISION = "COLLISION"
    OVERTIME = "OVERTIME"

    def __str__(self):
        return self.value


class TraceStatus(str, enum.Enum):
    GOAL = "GOAL"
    VIOLATION = "VIOLATION"
    TIMEOUT = "TIMEOUT"
    STALLED = "STALLED"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    predicate: str
    cycle: int
    state: WorldState = field(repr=False)

    def to_json(self) -> dict:
        return {"kind": str(self.kind), "predicate": self.predicate, "cycle": self.cycle}

    def __str__(self):
        return f"{self.kind}:{self.predicate}"


@dataclass(frozen=True)
class CycleRecord:
    """The snapshot at ``cycle`` plus what happened in the cycle that produced it.

    Record 0 is the initial state; its ``event`` is ``"init"``.
    """

    cycle: int
    state: WorldState
    event: str
    proposal: Optional[AcProposal] = None
    rejected: Optional[str] = None
    decision: Optional[str] = None
    violations: tuple = ()


@dataclass
class Trace:
    scenario: str
    consts: ScenarioConstants
    seed: object
    strategy: str
    records: List[CycleRecord] = field(default_factory=list)
    status: Optional[TraceStatus] = None

    @property
    def final(self) -> WorldState:
        return self.records[-1].state

    @property
    def cycles(self) -> int:
        return len(self.records) - 1

    @property
    def violations(self) -> List[Violation]:
        return [v for r in self.records for v in r.violations]


# -- violation detection ---------------------------------------------------------

def _a_floor(state: WorldState, consts):
    return -consts.b_min if state.actor == Ctrl.BC else -consts.b_max


def detect_violations(spec: SubscenarioSpec, state: WorldState, consts: ScenarioConstants,
                      cycle: int = 0, collision_margin=0, check_invariants: bool = True
                      ) -> List[Violation]:
    """Every broken predicate of the active subscenario at ``state``.

    Checks the manoeuvre-level machine invariants (which include the inherited
    abstract ones such as ``precond`` and ``switching``), the safety clauses
    (the acceleration band is ``-b_min`` for BC-produced states and ``-b_max``
    otherwise), collisions with leading POVs, and the lane-change time limit.
    """
    out = []
    if check_invariants:
        m = concrete_machine(spec, consts)
        if m is not None:
            from .machines import to_valuation
            for label in m.violated_invariants(to_valuation(m, state)):
                out.append(Violation(ViolationKind.INVARIANT, label, cycle, state))
    for label, ok in spec.safety(state, consts, _a_floor(state, consts)).items():
        if not ok:
            out.append(Violation(ViolationKind.SAFETY, label, cycle, state))
    for p in state.povs:
        if p.id in (2, 3) and state.lanes & p.lanes and p.x - state.sv.x <= collision_margin:
            out.append(Violation(ViolationKind.COLLISION, f"pov{p.id}", cycle, state))
    if spec.time_limited and state.t_lce > consts.t_lc:
        out.append(Violation(ViolationKind.OVERTIME, "no_overtime", cycle, state))
    return out


# -- trace runner ----------------------------------------------------------------

def make_initial_state(spec: SubscenarioSpec, consts: ScenarioConstants, x, v,
                       x2=None, v2=None, t_lce=0, extra_povs=()) -> WorldState:
    """Initial snapshot for S4 (lane 3) or S3 (lane 2, POV2 ahead)."""
    sv = VehicleKinematics(consts.num(x), consts.num(v), consts.num(0))
    if spec.time_limited:
        if x2 is None or v2 is None:
            raise ContractError("S3 initial states need x2 and v2", label="pov2")
        povs = (make_pov(2, consts.num(x2), consts.num(v2), consts.num(0)),) + tuple(extra_povs)
        t = consts.num(t_lce)
        return WorldState(sv=sv, povs=tuple(sorted(povs, key=lambda p: p.id)),
                          lanes=lane_change_lanes(t, consts.t_lc, *spec.lane_change), t_lce=t,
                          v_bc0=consts.num(0))
    return WorldState(sv=sv, povs=tuple(extra_povs), t_lce=consts.num(0), v_bc0=consts.num(0))


def run_trace(spec: SubscenarioSpec, init: WorldState, ac: AcStrategy, max_cycles: int,
              consts: ScenarioConstants, seed=0, policy: str = SUBSTITUTE,
              rng: Optional[random.Random] = None, stall_limit: int = 10,
              collision_margin=0, check_invariants: bool = True) -> Trace:
    """Run Simplex cycles until the goal, a violation, a stall or ``max_cycles``.

    ``init`` must satisfy the precondition and the environment assumption;
    otherwise ``ContractError`` names the failing clause.  A trace stops at the
    first cycle with a violation.  STALLED means the SV stood still off the
    goal for ``stall_limit`` consecutive cycles.
    """
    clauses = spec.precondition(init, consts)
    bad = failing_clause(clauses)
    if bad is not None:
        raise ContractError(f"initial state violates precondition clause {bad}", label=bad)
    if not env_holds(init.povs, consts):
        raise ContractError("initial state violates the environment assumption", label="env")
    rng = rng or trace_rng(seed)
    ac.reset()
    state = initial_control(init, spec, consts)
    trace = Trace(spec.id, consts, seed, getattr(ac, "name", type(ac).__name__))
    viol = tuple(detect_violations(spec, state, consts, 0, collision_margin, check_invariants))
    trace.records.append(CycleRecord(0, state, "init", violations=viol))
    if viol:
        trace.status = TraceStatus.VIOLATION
        return trace
    if spec.goal(state, consts):
        trace.status = TraceStatus.GOAL
        return trace
    still = 0
    for k in range(1, max_cycles + 1):
        out: CycleOutcome = simplex_step(state, ac, spec, consts, rng, policy)
        new = out.state
        viol = tuple(detect_violations(spec, new, consts, k, collision_margin, check_invariants))
        trace.records.append(CycleRecord(k, new, out.event, out.proposal, out.rejected,
                                         str(out.decision), viol))
        if viol:
            trace.status = TraceStatus.VIOLATION
            return trace
        if spec.goal(new, consts):
            trace.status = TraceStatus.GOAL
            return trace
        if new.sv.v == 0 and new.sv.x == state.sv.x:
            still += 1
            if still >= stall_limit:
                trace.status = TraceStatus.STALLED
                return trace
        else:
            still = 0
        state = new
    trace.status = TraceStatus.TIMEOUT
    return trace


# -- sweeps ------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """Initial-state grid: ``x``, ``v`` and (S3) ``gap`` and ``v2`` value lists."""

    x: Sequence
    v: Sequence
    gap: Sequence = (None,)
    v2: Sequence = (None,)

    def points(self):
        for x in self.x:
            for v in self.v:
                for gap in self.gap:
                    for v2 in self.v2:
                        yield x, v, gap, v2

    def __len__(self):
        return len(self.x) * len(self.v) * len(self.gap) * len(self.v2)


def frange(start, stop, step, consts: ScenarioConstants):
    """Inclusive arithmetic progression in the scenario's number type."""
    start, stop, step = consts.num(start), consts.num(stop), consts.num(step)
    if step <= 0:
        raise ContractError("lattice step must be > 0", label="step")
    out, k = [], 0
    while True:
        value = start + k * step
        if value > stop:
            break
        out.append(value)
        k += 1
    return out


@dataclass
class SweepPoint:
    x: object
    v: object
    gap: object
    v2: object
    status: str
    cycles: int
    final_x: object = None
    final_v: object = None


@dataclass
class SweepReport:
    scenario: str
    points: List[SweepPoint]
    skipped: int
    boundary: List[tuple] = field(default_factory=list)

    @property
    def ran(self) -> int:
        return len(self.points)

    def counts(self) -> dict:
        out = {st.value: 0 for st in TraceStatus}
        for p in self.points:
            out[p.status] += 1
        out["SKIPPED"] = self.skipped
        return out


def sweep_initial_states(spec: SubscenarioSpec, grid: Lattice, ac: AcStrategy,
                         consts: ScenarioConstants, seed=0, max_cycles: int = 500,
                         policy: str = SUBSTITUTE) -> SweepReport:
    """Run one trace per lattice point whose initial state meets the precondition.

    ``boundary`` lists neighbouring lattice points (along ``x`` or ``v``)
    whose outcomes differ between GOAL and non-GOAL.
    """
    if len(grid) == 0:
        raise ContractError("empty lattice", label="lattice")
    points, skipped = [], 0
    outcome = {}
    for i, (x, v, gap, v2) in enumerate(grid.points()):
        x2 = None if gap is None else consts.num(x) + consts.num(gap)
        try:
            init = make_initial_state(spec, consts, x, v, x2, v2)
        except ContractError:
            skipped += 1
            continue
        if not spec.precondition_holds(init, consts) or not env_holds(init.povs, consts):
            skipped += 1
            continue
        tr = run_trace(spec, init, ac, max_cycles, consts, rng=trace_rng(seed, i), policy=policy)
        fin = tr.final.sv
        points.append(SweepPoint(x, v, gap, v2, str(tr.status), tr.cycles, fin.x, fin.v))
        outcome[(x, v, gap, v2)] = str(tr.status)
    boundary = []
    xs, vs = list(grid.x), list(grid.v)
    for key, st in outcome.items():
        x, v, gap, v2 = key
        for nxt in _neighbours(x, v, xs, vs):
            other = outcome.get(nxt + (gap, v2))
            if other is not None and (st == "GOAL") != (other == "GOAL"):
                boundary.append((key, nxt + (gap, v2)))
    return SweepReport(spec.id, points, skipped, boundary)


def _neighbours(x, v, xs, vs):
    i, j = xs.index(x), vs.index(v)
    if i + 1 < len(xs):
        yield (xs[i + 1], v)
    if j + 1 < len(vs):
        yield (x, vs[j + 1])


# -- writers ----------------------------------------------------------------------

CSV_COLUMNS = ("cycle", "x_sv", "v_sv", "ctrl", "t_cruise", "t_brake", "x_2", "t_LCe",
               "dm_decision", "violations")


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_row(r: CycleRecord) -> dict:
    s = r.state
    p2 = s.pov(2)
    return {
        "cycle": r.cycle, "x_sv": _num(s.sv.x), "v_sv": _num(s.sv.v), "ctrl": str(s.ctrl),
        "t_cruise": _num(s.plan.t_cruise), "t_brake": _num(s.plan.t_brake),
        "x_2": _num(p2.x) if p2 is not None else "", "t_LCe": _num(s.t_lce),
        "dm_decision": r.decision or "",
        "violations": ";".join(str(v) for v in r.violations),
    }


def write_trace_csv(trace: Trace, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in trace.records:
        w.writerow(record_row(r))


def record_json(r: CycleRecord) -> dict:
    s = r.state
    out = {
        "cycle": r.cycle, "event": r.event, "decision": r.decision,
        "sv": {"x": _num(s.sv.x), "v": _num(s.sv.v), "a_cmd": _num(s.sv.a_cmd)},
        "ctrl": str(s.ctrl), "v_bc0": _num(s.v_bc0), "lanes": sorted(s.lanes),
        "t_lce": _num(s.t_lce),
        "plan": {"t_accel": _num(s.plan.t_accel), "t_cruise": _num(s.plan.t_cruise),
                 "t_brake": _num(s.plan.t_brake), "response": s.plan.last_response_id},
        "povs": [{"id": p.id, "x": _num(p.x), "v": _num(p.v)} for p in s.povs],
        "violations": [v.to_json() for v in r.violations],
    }
    if r.proposal is not None:
        out["proposal"] = {"p_x": _num(r.proposal.p_x), "p_v": _num(r.proposal.p_v)}
    if r.rejected is not None:
        out["rejected"] = r.rejected
    return out


def write_trace_jsonl(trace: Trace, fh) -> None:
    header = {"scenario": trace.scenario, "seed": trace.seed, "strategy": trace.strategy,
              "status": str(trace.status), "cycles": trace.cycles,
              "constants": {k: _num(v) for k, v in trace.consts.as_dict().items()}}
    fh.write(json.dumps({"trace": header}, sort_keys=True) + "\n")
    for r in trace.records:
        fh.write(json.dumps(record_json(r), sort_keys=True) + "\n")


def write_sweep_csv(report: SweepReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "v", "gap", "v2", "status", "cycles", "final_x", "final_v"])
    for p in report.points:
        w.writerow([_num(p.x), _num(p.v), _num(p.gap), _num(p.v2), p.status, p.cycles,
                    _num(p.final_x), _num(p.final_v)])


def sweep_summary(report: SweepReport) -> str:
    counts = report.counts()
    parts = [f"{k} {v}" for k, v in counts.items()]
    return (f"{report.scenario}: ran {report.ran}, " + ", ".join(parts)
            + f", boundary pairs {len(report.boundary)}")


def trace_to_string(trace: Trace, fmt: str = "jsonl") -> str:
    buf = io.StringIO()
    (write_trace_csv if fmt == "csv" else write_trace_jsonl)(trace, buf)
    return buf.getvalue()
