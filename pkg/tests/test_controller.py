import math
import random

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from simplex_rss import (SPEC_S3, SPEC_S4, ScenarioConstants, VehicleKinematics, WorldState,
                         make_pov)
from simplex_rss.controller import (CLIP, SUBSTITUTE, AcProposal, Cruise, Decision, MaxAccel,
                                    RandomAdmissible, Scripted, bc_step, brake_time_s3_formula,
                                    compute_schedule_s3, compute_schedule_s4, dm_decide,
                                    make_strategy, simplex_cycle, simplex_step, switching_holds)
from simplex_rss.errors import ConfigError, DomainError, PreconditionError
from simplex_rss.kinematics import admissible_next
from simplex_rss.rss import gap_clause_machine, phi4
from simplex_rss.state import BCSchedule, Ctrl
from oracles import F, R, s4_schedule
from strategies import rationals


def s4(x, v, ctrl=Ctrl.AC, plan=BCSchedule(), v_bc0=0):
    return WorldState(sv=VehicleKinematics(mpq(x), mpq(v)), ctrl=ctrl, plan=plan,
                      v_bc0=mpq(v_bc0))


def test_schedule_s4_examples(consts):
    assert compute_schedule_s4(0, 10, consts) == BCSchedule(0, mpq(15, 2), 5, "alpha4")
    plan = compute_schedule_s4(75, 10, consts)
    assert (plan.t_cruise, plan.t_brake) == (0, 5)
    with pytest.raises(PreconditionError):
        compute_schedule_s4(90, 10, consts)
    with pytest.raises(DomainError):
        compute_schedule_s4(0, 0, consts)


@given(rationals(0, 99), rationals(1, 20, 8))
def test_schedule_s4_matches_symbolic_solution(p_x, p_v):
    c = ScenarioConstants()
    if not phi4(p_x, p_v, c):
        return
    tc, tb = s4_schedule(p_x, p_v)
    plan = compute_schedule_s4(p_x, p_v, c)
    assert (F(plan.t_cruise), F(plan.t_brake)) == (F(tc), F(tb))


def test_schedule_s4_float_boundary(fconsts):
    # on the phi4 boundary the float cruise time rounds to about -6e-13
    x, v = 100 - 0.01 ** 2 / 4, 0.01
    plan = compute_schedule_s4(x, v, fconsts)
    assert plan.t_cruise == 0 and plan.t_brake == pytest.approx(0.005)
    with pytest.raises(PreconditionError):
        compute_schedule_s4(99.99999, 0.01, fconsts)


def test_schedule_s3_examples(consts):
    assert brake_time_s3_formula(0, 10, 4, consts) == mpq(-15, 2)
    plan = compute_schedule_s3(0, 10, 4, consts)
    assert plan.t_brake == 0 and plan.t_cruise == 0
    with pytest.raises(PreconditionError):
        compute_schedule_s3(90, 10, 4, consts)


@given(rationals(0, 99), rationals(1, 20, 8), st.integers(0, 4))
def test_schedule_s3_fills_the_lane_change_and_keeps_s4_reachable(p_x, p_v, t_lce):
    c = ScenarioConstants()
    if not phi4(p_x, p_v, c):
        return
    plan = compute_schedule_s3(p_x, p_v, t_lce, c)
    assert plan.t_cruise >= 0 and plan.t_brake >= 0
    assert plan.t_cruise + plan.t_brake == (c.t_lc - t_lce) * c.dt
    formula = brake_time_s3_formula(p_x, p_v, t_lce, c)
    assert plan.t_brake == max(formula, 0)
    x, v = p_x, p_v
    state = s4(x, v, ctrl=Ctrl.BC, plan=plan)
    for _ in range(int(c.t_lc - t_lce)):
        sv, rest = bc_step(state, state.plan, c)
        state = state.replace(sv=sv, plan=rest)
    assert phi4(state.sv.x, state.sv.v, c)


def test_bc_step_examples(consts):
    sv, plan = bc_step(s4(0, 10, Ctrl.BC), BCSchedule(0, mpq(15, 2), 5), consts)
    assert (sv.x, sv.v, plan.t_cruise, plan.t_brake) == (10, 10, mpq(13, 2), 5)
    sv, plan = bc_step(s4(0, 10, Ctrl.BC), BCSchedule(0, mpq(1, 2), 5), consts)
    assert (sv.x, sv.v, plan.t_cruise, plan.t_brake) == (mpq(39, 4), 9, 0, mpq(9, 2))
    sv, plan = bc_step(s4(7, 0, Ctrl.BC), BCSchedule(), consts)
    assert (sv.x, sv.v) == (7, 0)


@given(rationals(0, 99), rationals(mpq(1, 8), 20, 8))
def test_exact_termination_s4(p_x, p_v):
    c = ScenarioConstants()
    if not phi4(p_x, p_v, c):
        return
    plan = compute_schedule_s4(p_x, p_v, c)
    state = s4(p_x, p_v, Ctrl.BC, plan)
    n = math.ceil(F(plan.t_cruise + plan.t_brake))
    prev_v = state.sv.v
    for _ in range(n):
        sv, rest = bc_step(state, state.plan, c)
        assert sv.v <= prev_v
        prev_v = sv.v
        state = state.replace(sv=sv, plan=rest)
    assert (state.sv.x, state.sv.v) == (c.x_tgt, 0)


def test_dm_examples(consts):
    assert dm_decide(s4(0, 10), SPEC_S4, consts) == Decision.STAY
    assert dm_decide(s4(60, 12), SPEC_S4, consts) == Decision.SWITCH
    assert dm_decide(s4(60, 12, Ctrl.BC), SPEC_S4, consts) == Decision.STAY
    assert dm_decide(s4(0, 10, Ctrl.BC), SPEC_S4, consts) == Decision.SWITCH


def test_s3_dm_moves_pov2_two_cycles(consts):
    # two max-accel cycles from (0, 8) reach (18, 10); the gap clause there needs x2 >= 30.5
    state = WorldState(sv=VehicleKinematics(mpq(0), mpq(8)), povs=(make_pov(2, mpq(11), mpq(10)),),
                       lanes=frozenset({2}), t_lce=mpq(0))
    assert not gap_clause_machine(18, 10, 11, 10, consts)
    assert gap_clause_machine(18, 10, 31, 10, consts)
    assert dm_decide(state, SPEC_S3, consts) == Decision.STAY


def test_simplex_cycle_switches_with_schedule_at_proposal(consts):
    state = s4(40, 12)
    assert switching_holds(state, SPEC_S4, consts)
    post = simplex_cycle(state, MaxAccel(), SPEC_S4, consts)
    assert post.ctrl == Ctrl.BC and post.v_bc0 == 13
    assert (post.sv.x, post.sv.v) == (mpq(105, 2), 13)
    assert (post.plan.t_cruise, post.plan.t_brake) == (mpq(21, 52), mpq(13, 2))


def test_simplex_cycle_holding_stays_bc(consts):
    state = s4(99, 0, Ctrl.BC)
    post = simplex_cycle(state, MaxAccel(), SPEC_S4, consts)
    assert post.ctrl == Ctrl.BC and (post.sv.x, post.sv.v) == (99, 0)


def test_simplex_cycle_release_keeps_velocity(consts):
    state = s4(0, 10, Ctrl.BC, BCSchedule(0, mpq(15, 2), 5), v_bc0=10)
    post = simplex_cycle(state, MaxAccel(), SPEC_S4, consts)
    assert post.ctrl == Ctrl.AC and post.sv.v == 10 and post.sv.x == 10


class _Wild:
    name = "wild"

    def reset(self):
        pass

    def propose(self, state, consts, rng):
        return AcProposal(state.sv.x + 100, state.sv.v + 5)


def test_inadmissible_proposal_policies(consts):
    out = simplex_step(s4(0, 10), _Wild(), SPEC_S4, consts, random.Random(0), SUBSTITUTE)
    assert out.rejected is not None and (out.state.sv.x, out.state.sv.v) == (10, 10)
    out = simplex_step(s4(0, 10), _Wild(), SPEC_S4, consts, random.Random(0), CLIP)
    assert (out.state.sv.x, out.state.sv.v) == (mpq(21, 2), 11)
    with pytest.raises(ConfigError):
        simplex_step(s4(0, 10), _Wild(), SPEC_S4, consts, random.Random(0), "ignore")


@given(rationals(0, 90), rationals(0, 20), st.integers(0, 1000))
def test_random_admissible_is_admissible(x, v, seed):
    c = ScenarioConstants()
    p = RandomAdmissible().propose(s4(x, v), c, random.Random(seed))
    assert admissible_next(VehicleKinematics(x, v), p.p_x, p.p_v, c)
    assert 0 <= p.p_v <= c.v_max


def test_max_accel_caps_at_v_max(consts):
    p = MaxAccel().propose(s4(0, 20), consts, random.Random(0))
    assert (p.p_x, p.p_v) == (20, 20)
    p = Cruise().propose(s4(0, 7), consts, random.Random(0))
    assert (p.p_x, p.p_v) == (7, 7)


def test_scripted_from_csv(tmp_path, consts):
    path = tmp_path / "ac.csv"
    path.write_text("p_x,p_v\n1/2,1\n# comment\n2,2\n")
    ac = make_strategy("scripted", path=str(path))
    rng = random.Random(0)
    assert ac.propose(s4(0, 0), consts, rng) == AcProposal(mpq(1, 2), 1)
    assert ac.propose(s4(0, 0), consts, rng) == AcProposal(2, 2)
    assert ac.propose(s4(3, 4), consts, rng) == AcProposal(7, 4)
    ac.reset()
    assert ac.propose(s4(0, 0), consts, rng) == AcProposal(mpq(1, 2), 1)


def test_unknown_strategy():
    with pytest.raises(ConfigError):
        make_strategy("genius")
