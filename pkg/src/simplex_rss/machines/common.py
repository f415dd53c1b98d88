"""Building blocks shared by the S4 and S3 machine families."""

from __future__ import annotations

import operator
from numbers import Number as _Number

from gmpy2 import mpq

from ..kinematics import EXACT, ScenarioConstants, eq, le, lt, plan_cycle

#: decision-module mutation: surely_safe_next looks one cycle ahead instead of two
MUTATION_ONE_CYCLE = "dm-one-cycle-lookahead"
MUTATIONS = (MUTATION_ONE_CYCLE,)

_MPQ = type(mpq(0))


def arith_ops(consts: ScenarioConstants):
    """``(le, lt, eq)`` for the scenario's arithmetic mode.

    Exact mode uses the plain operators, which are noticeably faster than the
    tolerant helpers.
    """
    if consts.arith == EXACT:
        return operator.le, operator.lt, operator.eq
    return le, lt, eq


def is_number(value) -> bool:
    return isinstance(value, (_MPQ, _Number)) and not isinstance(value, bool)


def lookahead(consts: ScenarioConstants, k: int):
    """``(x, v) -> (x, v)`` after ``k`` cycles at ``a_max`` (no speed cap)."""
    horizon = k * consts.dt
    dx = consts.a_max * horizon * horizon / 2
    dv = consts.a_max * horizon

    def ext(x, v):
        return x + v * horizon + dx, v + dv
    return ext


def update_xv(s, p):
    t = dict(s)
    t["x"], t["v"] = p["p_x"], p["p_v"]
    return t


def timers_after(consts: ScenarioConstants):
    """``(tc, tb) -> (tc', tb')`` after one cruise-then-brake cycle."""
    dt = consts.dt

    def after(tc, tb):
        used = tc if tc < dt else dt
        rest = dt - used
        return tc - used, tb - (tb if tb < rest else rest)
    return after


def plan_params(consts: ScenarioConstants):
    """Witness of the baseline controller's next ``(p_x, p_v)`` from the timers."""
    def witness(s):
        step = plan_cycle(s["x"], s["v"], 0, s["tc"], s["tb"], consts)
        return {"p_x": step.x, "p_v": step.v}
    return witness
