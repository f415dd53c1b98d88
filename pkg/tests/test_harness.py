import csv
import io
import json
import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from simplex_rss import SPEC_S3, SPEC_S4, ScenarioConstants, VehicleKinematics, make_pov
from simplex_rss.controller import Cruise, MaxAccel, RandomAdmissible
from simplex_rss.errors import ContractError
from simplex_rss.harness import (CSV_COLUMNS, Lattice, TraceStatus, ViolationKind,
                                 detect_violations, frange, make_initial_state, run_trace,
                                 sweep_initial_states, sweep_summary, trace_to_string,
                                 write_sweep_csv)
from simplex_rss.machines import to_valuation
from simplex_rss.rss import phi4
from simplex_rss.scenarios import concrete_machine
from simplex_rss.state import Ctrl
from strategies import rationals


def test_s4_max_accel_reaches_target_exactly(consts):
    init = make_initial_state(SPEC_S4, consts, 0, 0)
    tr = run_trace(SPEC_S4, init, MaxAccel(), 500, consts)
    assert tr.status == TraceStatus.GOAL
    assert (tr.final.sv.x, tr.final.sv.v) == (100, 0)
    assert [r.cycle for r in tr.records] == list(range(len(tr.records)))


def test_zero_cycles_is_timeout(consts):
    tr = run_trace(SPEC_S4, make_initial_state(SPEC_S4, consts, 0, 5), MaxAccel(), 0, consts)
    assert tr.status == TraceStatus.TIMEOUT and len(tr.records) == 1


def test_s3_bad_gap_names_clause(consts):
    init = make_initial_state(SPEC_S3, consts, 29, 10, 30, 10)
    with pytest.raises(ContractError) as err:
        run_trace(SPEC_S3, init, MaxAccel(), 50, consts)
    assert err.value.label == "rss_gap_pov2"


def test_detect_violations_examples(consts):
    s = make_initial_state(SPEC_S4, consts, 0, 20)
    assert detect_violations(SPEC_S4, s, consts, check_invariants=False) == []
    s3 = make_initial_state(SPEC_S3, consts, 30, 10, 30, 10)
    kinds = {v.kind for v in detect_violations(SPEC_S3, s3, consts, check_invariants=False)}
    assert ViolationKind.COLLISION in kinds
    # gap exactly dRSS(10, 12) = 36 - 12.5
    s3 = make_initial_state(SPEC_S3, consts, 0, 10, mpq(47, 2) + 0, 10)
    s3 = s3.replace(sv=VehicleKinematics(mpq(0), mpq(10)))
    tight = s3.replace(povs=(make_pov(2, mpq(25 - 25, 1) + 0, mpq(10)),))
    assert detect_violations(SPEC_S3, s3, consts, check_invariants=False) == []
    gap = mpq(100, 4) - mpq(100, 8)
    exact = s3.replace(povs=(make_pov(2, gap, mpq(10)),))
    assert detect_violations(SPEC_S3, exact, consts, check_invariants=False) == []


def test_collision_margin_folds_vehicle_length(consts):
    s3 = make_initial_state(SPEC_S3, consts, 0, 5, 3, 10)
    assert detect_violations(SPEC_S3, s3, consts, check_invariants=False) == []
    kinds = [v.kind for v in detect_violations(SPEC_S3, s3, consts, collision_margin=4,
                                               check_invariants=False)]
    assert kinds == [ViolationKind.COLLISION]


def test_violation_reproduces_at_snapshot(consts):
    s = make_initial_state(SPEC_S4, consts, 0, 21)
    for v in detect_violations(SPEC_S4, s, consts):
        if v.kind == ViolationKind.SAFETY:
            assert not SPEC_S4.safety(v.state, consts, -consts.b_max)[v.predicate]


def test_sweep_s4(consts):
    grid = Lattice(frange(0, 90, 10, consts), frange(0, 20, 2, consts))
    rep = sweep_initial_states(SPEC_S4, grid, MaxAccel(), consts)
    assert rep.ran + rep.skipped == len(grid)
    for p in rep.points:
        if p.v > 0:
            assert p.status == "GOAL" and (p.final_x, p.final_v) == (100, 0)
    skipped = sum(1 for x in grid.x for v in grid.v if not phi4(x, v, consts))
    assert rep.skipped == skipped
    assert "ran" in sweep_summary(rep)


def test_sweep_cruise_from_standstill_stalls(consts):
    rep = sweep_initial_states(SPEC_S4, Lattice([mpq(10)], [mpq(0)]), Cruise(), consts)
    assert [p.status for p in rep.points] == ["STALLED"]


def test_sweep_single_point_csv(consts):
    rep = sweep_initial_states(SPEC_S4, Lattice([mpq(0)], [mpq(4)]), MaxAccel(), consts)
    buf = io.StringIO()
    write_sweep_csv(rep, buf)
    assert len(buf.getvalue().splitlines()) == 2


def test_empty_lattice(consts):
    with pytest.raises(ContractError):
        sweep_initial_states(SPEC_S4, Lattice([], [mpq(0)]), MaxAccel(), consts)


def test_s3_goal_trace_ends_in_lane_3(consts):
    init = make_initial_state(SPEC_S3, consts, 0, 8, 40, 10)
    tr = run_trace(SPEC_S3, init, MaxAccel(), 50, consts)
    assert tr.status == TraceStatus.GOAL
    assert tr.final.t_lce == consts.t_lc and tr.final.lanes == frozenset({3})


def test_trace_writers(consts):
    init = make_initial_state(SPEC_S3, consts, 0, 8, 40, 10)
    tr = run_trace(SPEC_S3, init, RandomAdmissible(), 50, consts, seed=4)
    rows = list(csv.DictReader(io.StringIO(trace_to_string(tr, "csv"))))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == len(tr.records)
    lines = trace_to_string(tr, "jsonl").splitlines()
    header = json.loads(lines[0])["trace"]
    assert header["status"] == "GOAL" and len(lines) == len(tr.records) + 1
    assert trace_to_string(tr) == trace_to_string(
        run_trace(SPEC_S3, init, RandomAdmissible(), 50, consts, seed=4))


def _check_event_labels(spec, tr, consts):
    """Each record's event guard holds at (previous state, params) and its action gives the record."""
    m = concrete_machine(spec, consts)
    for prev, rec in zip(tr.records, tr.records[1:]):
        e = m.event(rec.event)
        s = to_valuation(m, prev.state)
        if e.witness is not None:
            p = e.witness(s)
        else:
            p = {"p_x": rec.state.sv.x, "p_v": rec.state.sv.v}
        assert e.holds(s, p), (rec.cycle, rec.event, e.failing_guard(s, p))
        assert e.action(s, p) == to_valuation(m, rec.state)


@settings(max_examples=60)
@given(rationals(0, 100), rationals(0, 20, 8), st.integers(0, 10 ** 6), st.booleans())
def test_s4_traces_follow_machine_events(x, v, seed, adversarial):
    c = ScenarioConstants()
    if not phi4(x, v, c):
        return
    ac = MaxAccel() if adversarial else RandomAdmissible()
    tr = run_trace(SPEC_S4, make_initial_state(SPEC_S4, c, x, v), ac, 500, c, seed=seed)
    assert tr.status in (TraceStatus.GOAL, TraceStatus.STALLED)
    assert not tr.violations
    _check_event_labels(SPEC_S4, tr, c)


@settings(max_examples=60)
@given(rationals(0, 80), rationals(mpq(1, 8), 20, 8), rationals(0, 150), rationals(5, 20),
       st.integers(0, 10 ** 6), st.booleans())
def test_s3_traces_follow_machine_events(x, v, gap, v2, seed, adversarial):
    c = ScenarioConstants()
    init = make_initial_state(SPEC_S3, c, x, v, x + gap, v2)
    if not SPEC_S3.precondition_holds(init, c):
        return
    ac = MaxAccel() if adversarial else RandomAdmissible()
    tr = run_trace(SPEC_S3, init, ac, 500, c, seed=seed)
    assert tr.status == TraceStatus.GOAL and not tr.violations
    _check_event_labels(SPEC_S3, tr, c)
