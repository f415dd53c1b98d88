from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given

from simplex_rss import ScenarioConstants, VehicleKinematics, WorldState, make_pov
from simplex_rss.errors import DomainError, FeatureError
from simplex_rss.rss import (S1, S3, S4, d_rss, env_holds, gap_clause_drss, gap_clause_machine,
                             goal_pred, phi3, phi3_dm, phi3_machine, phi4, precondition_clauses,
                             safety_pred)
from simplex_rss.state import PovState
from oracles import F, d_rss as d_rss_oracle
from strategies import rationals


def sv(x, v, a=0):
    return VehicleKinematics(mpq(x), mpq(v), mpq(a))


@pytest.mark.parametrize("vf, vr", [(4, 10), (20, 0), (20, 4), (5, 5), (mpq(3, 7), mpq(19, 3))])
def test_d_rss_matches_oracle(consts, vf, vr):
    assert F(d_rss(vf, vr, consts)) == d_rss_oracle(vf, vr)


def test_d_rss_examples(consts):
    assert d_rss(4, 10, consts) == 23
    assert d_rss(20, 0, consts) == 0
    assert d_rss(20, 4, consts) == 0


def test_d_rss_rejects_negative(consts):
    with pytest.raises(DomainError):
        d_rss(-1, 3, consts)


@given(rationals(0, 20), rationals(0, 20), rationals(0, 5))
def test_d_rss_monotone(vf, vr, dv):
    c = ScenarioConstants()
    d = d_rss(vf, vr, c)
    assert d >= 0
    assert d_rss(vf, vr + dv, c) >= d
    assert d_rss(vf + dv, vr, c) <= d


def test_env_examples(consts):
    povs = [make_pov(1, mpq(0), mpq(10)), make_pov(2, mpq(20), mpq(10)),
            make_pov(3, mpq(5), mpq(10))]
    assert env_holds(povs, consts)
    accel = [PovState(2, mpq(20), mpq(10), a=mpq(1), lanes=frozenset({2}))]
    assert not env_holds(accel, consts)
    swapped = [make_pov(1, mpq(20), mpq(10)), make_pov(2, mpq(20), mpq(10))]
    assert not env_holds(swapped, consts)
    too_slow = [make_pov(2, mpq(20), mpq(1))]
    assert not env_holds(too_slow, consts)


def test_phi4_examples(consts):
    assert phi4(0, 10, consts)
    assert phi4(consts.x_tgt, 0, consts)
    assert not phi4(90, 10, consts)


@given(rationals(0, 100), rationals(0, 20), rationals(0, 10))
def test_phi4_antitone(x, v, d):
    c = ScenarioConstants()
    assert phi4(c.x_tgt, 0, c)
    if phi4(x + d, v, c):
        assert phi4(x, v, c)
    if phi4(x, v + d, c):
        assert phi4(x, v, c)


def test_phi3_examples(consts):
    assert phi3(0, 8, 30, 10, consts)
    assert phi3(0, 0, 1, 10, consts)
    assert not phi3(29, 10, 30, 4, consts)


def test_phi3_workflow_flag_adds_velocity_clause(consts):
    assert phi3(0, 0, 1, 10, consts) and not phi3(0, 0, 1, 10, consts, workflow=True)
    assert phi3(0, 8, 30, 10, consts, workflow=True)
    assert phi3(0, 11, 80, 10, consts) and not phi3(0, 11, 80, 10, consts, workflow=True)


def test_phi3_dm_adds_speed_bound(consts):
    assert phi3_machine(0, 11, 80, 10, consts)
    assert not phi3_dm(0, 11, 80, 10, consts)


@given(rationals(0, 100), rationals(0, 20), rationals(0, 150), rationals(5, 20))
def test_gap_forms_agree_behind_pov(x, v, gap, v2):
    c = ScenarioConstants()
    x2 = x + gap
    if x < x2:
        assert gap_clause_drss(x, v, x2, v2, c) == gap_clause_machine(x, v, x2, v2, c)


def _s3_state(x, v, x2, v2, lanes=frozenset({2, 3}), t_lce=1, a=0):
    return WorldState(sv=sv(x, v, a), povs=(make_pov(2, mpq(x2), mpq(v2)),), lanes=lanes,
                      t_lce=mpq(t_lce))


def test_goal_examples(consts):
    assert goal_pred(S4, WorldState(sv=sv(100, 0)), consts)
    assert not goal_pred(S4, WorldState(sv=sv(100, mpq(1, 2))), consts)
    assert not goal_pred(S3, _s3_state(0, 5, 50, 10), consts)
    assert goal_pred(S3, _s3_state(0, 5, 50, 10, lanes=frozenset({3}), t_lce=4), consts)
    with pytest.raises(FeatureError):
        goal_pred(S1, WorldState(sv=sv(0, 0)), consts)


def test_safety_examples(consts):
    assert safety_pred(S4, WorldState(sv=sv(50, 20, -2)), consts)
    assert not safety_pred(S4, WorldState(sv=sv(50, -1)), consts)
    assert not safety_pred(S4, WorldState(sv=sv(50, 5, -3)), consts)
    assert not safety_pred(S3, _s3_state(29, 10, 30, 4), consts)
    assert safety_pred(S3, _s3_state(0, 10, 30, 10), consts)
    with pytest.raises(FeatureError):
        safety_pred(S1, WorldState(sv=sv(0, 0)), consts)


def test_s4_safety_clauses_are_the_hand_expansion(consts):
    for x, v, a, lanes in [(0, 0, 0, {3}), (10, 21, 0, {3}), (10, 5, 2, {3}), (10, 5, 0, {2})]:
        s = WorldState(sv=sv(x, v, a), lanes=frozenset(lanes))
        hand = lanes == {3} and 0 <= v <= 20 and -2 <= a <= 1
        assert safety_pred(S4, s, consts) == hand


def test_s3_precondition_clauses(consts):
    s = _s3_state(0, 8, 30, 10, lanes=frozenset({2}), t_lce=0)
    assert all(precondition_clauses(S3, s, consts).values())
    bad = _s3_state(29, 10, 30, 10, lanes=frozenset({2}), t_lce=0)
    clauses = precondition_clauses(S3, bad, consts)
    assert not clauses["rss_gap_pov2"]
