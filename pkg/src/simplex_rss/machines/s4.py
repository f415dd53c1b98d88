"""Machines M40, M41 and M42: stopping at the target in lane 3.

Valuation keys: ``x``, ``v`` (subject vehicle), ``ctrl``, ``v_bc0`` (from
M41), ``tc``, ``tb`` (remaining cruise / brake time, from M42).
"""

from __future__ import annotations

from ..kinematics import ScenarioConstants
from ..state import Ctrl
from .core import Atom, EventDef, Invariant, MachineDef
from .common import (MUTATION_ONE_CYCLE, arith_ops, is_number, lookahead, plan_params,
                     timers_after, update_xv)

AC, BC = Ctrl.AC, Ctrl.BC
FAMILY = "S4"


def _phi4(consts: ScenarioConstants):
    le, _, _ = arith_ops(consts)
    x_tgt = consts.x_tgt
    inv2b = 1 / (2 * consts.b_min)

    def phi(x, v):
        return le(v * v * inv2b, x_tgt - x)
    return phi


def run_guards(consts: ScenarioConstants):
    """Guard atoms of M40's ``run`` event, in order."""
    le, _, _ = arith_ops(consts)
    phi = _phi4(consts)
    x_tgt, v_max = consts.x_tgt, consts.v_max
    dx_hi = consts.a_max * consts.dt * consts.dt / 2
    dv_hi, dv_lo = consts.a_max * consts.dt, consts.b_max * consts.dt
    dt = consts.dt
    return (
        Atom("preserve_no_overrun", lambda s, p: le(0, p["p_x"]) and le(p["p_x"], x_tgt)),
        Atom("preserve_v_regulated", lambda s, p: le(0, p["p_v"]) and le(p["p_v"], v_max)),
        Atom("preserve_precond", lambda s, p: phi(p["p_x"], p["p_v"])),
        Atom("x_physical_constr",
             lambda s, p: le(s["x"], p["p_x"]) and le(p["p_x"], s["x"] + s["v"] * dt + dx_hi)),
        Atom("v_physical_constr",
             lambda s, p: le(s["v"] - dv_lo, p["p_v"]) and le(p["p_v"], s["v"] + dv_hi)),
    )


def build_m40(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    le, _, _ = arith_ops(consts)
    phi = _phi4(consts)
    x_tgt, v_max = consts.x_tgt, consts.v_max
    invariants = (
        Invariant("types", lambda s: is_number(s["x"]) and is_number(s["v"])),
        Invariant("no_overrun", lambda s: le(0, s["x"]) and le(s["x"], x_tgt)),
        Invariant("v_regulated", lambda s: le(0, s["v"]) and le(s["v"], v_max)),
        Invariant("precond", lambda s: phi(s["x"], s["v"])),
    )
    run = EventDef("run", run_guards(consts), update_xv)
    return MachineDef("M40", FAMILY, ("x", "v"), invariants, (run,), None, consts,
                      mutations=frozenset(mutations))


def _switch_atoms(consts: ScenarioConstants, mutations):
    """(surely_safe_next, maybe_unsafe_next) atoms of the decision module."""
    phi = _phi4(consts)
    safe_k = 1 if MUTATION_ONE_CYCLE in mutations else 2
    ext_safe = lookahead(consts, safe_k)
    ext2 = lookahead(consts, 2)

    def surely(s, p):
        return phi(*ext_safe(s["x"], s["v"]))

    def maybe(s, p):
        return not phi(*ext2(s["x"], s["v"]))
    return Atom("surely_safe_next", surely), Atom("maybe_unsafe_next", maybe)


def _to_bc(s, p):
    t = dict(s)
    t["x"], t["v"] = p["p_x"], p["p_v"]
    t["ctrl"], t["v_bc0"] = BC, p["p_v"]
    return t


def _to_ac(s, p):
    t = dict(s)
    t["x"], t["v"] = p["p_x"], p["p_v"]
    t["ctrl"] = AC
    return t


def build_m41(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    mutations = frozenset(mutations)
    m40 = build_m40(consts, mutations)
    le, _, _ = arith_ops(consts)
    phi = _phi4(consts)
    ext1 = lookahead(consts, 1)
    v_max = consts.v_max
    run = run_guards(consts)
    without_precond = tuple(a for a in run if a.label != "preserve_precond")
    surely, maybe = _switch_atoms(consts, mutations)
    ac_on = Atom("AC_operating", lambda s, p: s["ctrl"] == AC)
    bc_on = Atom("BC_operating", lambda s, p: s["ctrl"] == BC)
    no_accel = Atom("no_acceleration", lambda s, p: le(p["p_v"], s["v_bc0"]))

    invariants = (
        Invariant("ctrl_types", lambda s: s["ctrl"] in (AC, BC) and is_number(s["v_bc0"])),
        Invariant("vsvbcinit_regulated", lambda s: le(0, s["v_bc0"]) and le(s["v_bc0"], v_max)),
        Invariant("bc_no_accel", lambda s: s["ctrl"] != BC or le(s["v"], s["v_bc0"])),
        Invariant("switching", lambda s: s["ctrl"] != AC or phi(*ext1(s["x"], s["v"]))),
    )
    events = (
        EventDef("AC->AC", run + (ac_on, surely), update_xv, refines="run"),
        EventDef("AC->BC", without_precond + (ac_on, maybe), _to_bc, refines="run"),
        EventDef("BC->BC", run + (bc_on, no_accel, maybe), update_xv, refines="run"),
        EventDef("BC->AC", run + (bc_on, no_accel, surely), _to_ac, refines="run"),
    )
    return MachineDef("M41", FAMILY, m40.variables + ("ctrl", "v_bc0"), invariants, events,
                      m40, consts, mutations=mutations)


def build_m42(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    mutations = frozenset(mutations)
    m41 = build_m41(consts, mutations)
    le, lt, eq = arith_ops(consts)
    x_tgt, b, dt = consts.x_tgt, consts.b_min, consts.dt
    inv2b = 1 / (2 * b)
    surely, maybe = _switch_atoms(consts, mutations)
    bc_on = Atom("BC_operating", lambda s, p: s["ctrl"] == BC)
    witness = plan_params(consts)
    after = timers_after(consts)

    def time_to_cruise(x, v):
        return (x_tgt - x) / v - v * inv2b

    def x_in_bc(s):
        v = s["v"]
        if s["ctrl"] != BC or v == 0:
            return True
        tb = s["tb"]
        return eq(x_tgt - s["x"], s["tc"] * v + tb * v - b * tb * tb / 2)

    invariants = (
        Invariant("timer_types", lambda s: is_number(s["tc"]) and is_number(s["tb"])
                  and le(0, s["tc"]) and le(0, s["tb"])),
        Invariant("cruise_before_brake", lambda s: not s["tc"] > 0 or s["tb"] > 0),
        Invariant("v_in_BC", lambda s: s["ctrl"] != BC or eq(s["v"], s["tb"] * b)),
        Invariant("v_in_BC_cruise",
                  lambda s: s["ctrl"] != BC or not s["tc"] > 0 or eq(s["v"], s["v_bc0"])),
        Invariant("x_in_BC", x_in_bc),
    )

    def run_to_bc(s, p):
        t = _to_bc(s, p)
        t["tc"] = time_to_cruise(p["p_x"], p["p_v"])
        t["tb"] = p["p_v"] / b
        return t

    def stop_to_bc(s, p):
        t = _to_bc(s, p)
        t["tc"], t["tb"] = t["tc"] * 0, t["tb"] * 0
        return t

    def bc_step(target):
        def action(s, p):
            t = dict(s)
            t["x"], t["v"] = p["p_x"], p["p_v"]
            t["tc"], t["tb"] = after(s["tc"], s["tb"])
            t["ctrl"] = target
            return t
        return action

    def plan_xv(s, p):
        w = witness(s)
        return eq(p["p_x"], w["p_x"]) and eq(p["p_v"], w["p_v"])

    cruise_more = Atom("will_cruise_more", lambda s, p: le(dt, s["tc"]))
    cruise_xv = Atom("cruise_xv", lambda s, p: eq(p["p_x"], s["x"] + s["v"] * dt)
                     and eq(p["p_v"], s["v"]))
    cruise_tail = Atom("will_finish_cruise", lambda s, p: s["tc"] > 0 and lt(s["tc"], dt))
    cruise_done = Atom("cruise_done", lambda s, p: s["tc"] == 0)
    moving = Atom("moving", lambda s, p: s["v"] > 0)
    stopped = Atom("stopped", lambda s, p: s["v"] == 0)
    plan = Atom("plan_xv", plan_xv)

    ac_bc = m41.event("AC->BC").guard
    events = (
        EventDef("AC_run->AC", m41.event("AC->AC").guard, update_xv, refines="AC->AC"),
        EventDef("AC_run->BC", ac_bc + (Atom("will_run_more", lambda s, p: p["p_v"] > 0),),
                 run_to_bc, refines="AC->BC"),
        EventDef("AC_stop->BC", ac_bc + (Atom("will_stop", lambda s, p: p["p_v"] == 0),),
                 stop_to_bc, refines="AC->BC"),
        EventDef("BC_cruise->BC", (bc_on, maybe, cruise_more, cruise_xv), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_cruise_brake->BC", (bc_on, maybe, cruise_tail, plan), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_brake->BC", (bc_on, maybe, cruise_done, moving, plan), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_stop->BC", (bc_on, maybe, cruise_done, stopped, plan), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_cruise->AC", (bc_on, surely, cruise_more, cruise_xv), bc_step(AC),
                 refines="BC->AC", witness=witness),
        EventDef("BC_stop->AC", (bc_on, surely, cruise_done, stopped, plan), bc_step(AC),
                 refines="BC->AC", witness=witness),
    )
    return MachineDef("M42", FAMILY, m41.variables + ("tc", "tb"), invariants, events,
                      m41, consts, mutations=mutations)
