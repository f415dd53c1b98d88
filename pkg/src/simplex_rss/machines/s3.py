"""Machines M30, M31 and M32: changing from lane 2 to lane 3 behind POV2.

Valuation keys: ``x``, ``v`` (subject vehicle), ``x2``, ``v2`` (POV2),
``t_lce`` (elapsed lane-change cycles), ``ctrl``, ``v_bc0`` (from M31),
``tc``, ``tb`` (from M32).

The S3 precondition kept by these machines is the polynomial gap form plus
``v <= v2`` (``no_faster_than_lead``).
"""

from __future__ import annotations

from ..kinematics import ScenarioConstants
from ..state import Ctrl
from .common import (MUTATION_ONE_CYCLE, arith_ops, is_number, lookahead, plan_params,
                     timers_after)
from .core import Atom, EventDef, Invariant, MachineDef

AC, BC = Ctrl.AC, Ctrl.BC
FAMILY = "S3"


def phi3_predicate(consts: ScenarioConstants, with_speed: bool = True):
    """``(x, v, x2, v2) -> bool`` for the machine-form S3 precondition."""
    le, lt, _ = arith_ops(consts)
    x_tgt = consts.x_tgt
    inv2b, invb, invbmax = 1 / (2 * consts.b_min), 1 / consts.b_min, 1 / consts.b_max

    def phi(x, v, x2, v2):
        if with_speed and not le(v, v2):
            return False
        return (le(v * v * inv2b, x_tgt - x) and lt(x, x2)
                and le(2 * (x - x2) + v * v * invb, v2 * v2 * invbmax))
    return phi


def _advance(consts: ScenarioConstants):
    dt, t_lc = consts.dt, consts.t_lc

    def advance(s, p):
        t = dict(s)
        t["x"], t["v"] = p["p_x"], p["p_v"]
        t["x2"] = s["x2"] + s["v2"] * dt
        n = s["t_lce"] + 1
        t["t_lce"] = n if n < t_lc else t_lc
        return t
    return advance


def run_guards(consts: ScenarioConstants):
    le, lt, _ = arith_ops(consts)
    phi = phi3_predicate(consts, with_speed=False)
    v_max, dt, t_lc = consts.v_max, consts.dt, consts.t_lc
    dx_hi = consts.a_max * dt * dt / 2
    dv_hi, dv_lo = consts.a_max * dt, consts.b_max * dt
    return (
        Atom("preserve_no_overtime", lambda s, p: lt(s["t_lce"], t_lc)),
        Atom("preserve_v_regulated", lambda s, p: le(0, p["p_v"]) and le(p["p_v"], v_max)),
        Atom("preserve_precond",
             lambda s, p: phi(p["p_x"], p["p_v"], s["x2"] + s["v2"] * dt, s["v2"])),
        Atom("preserve_no_faster_than_lead", lambda s, p: le(p["p_v"], s["v2"])),
        Atom("x_physical_constr",
             lambda s, p: le(s["x"], p["p_x"]) and le(p["p_x"], s["x"] + s["v"] * dt + dx_hi)),
        Atom("v_physical_constr",
             lambda s, p: le(s["v"] - dv_lo, p["p_v"]) and le(p["p_v"], s["v"] + dv_hi)),
    )


def build_m30(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    le, _, _ = arith_ops(consts)
    phi = phi3_predicate(consts, with_speed=False)
    v_min, v_max, t_lc = consts.v_min, consts.v_max, consts.t_lc
    invariants = (
        Invariant("types", lambda s: all(is_number(s[k]) for k in ("x", "v", "x2", "v2", "t_lce"))),
        Invariant("env", lambda s: le(v_min, s["v2"]) and le(s["v2"], v_max)),
        Invariant("no_overtime", lambda s: le(0, s["t_lce"]) and le(s["t_lce"], t_lc)),
        Invariant("v_regulated", lambda s: le(0, s["v"]) and le(s["v"], v_max)),
        Invariant("precond", lambda s: phi(s["x"], s["v"], s["x2"], s["v2"])),
        Invariant("no_faster_than_lead", lambda s: le(s["v"], s["v2"])),
    )
    run = EventDef("run", run_guards(consts), _advance(consts))
    return MachineDef("M30", FAMILY, ("x", "v", "x2", "v2", "t_lce"), invariants, (run,), None,
                      consts, mutations=frozenset(mutations))


def _switch_atoms(consts: ScenarioConstants, mutations):
    phi = phi3_predicate(consts)
    dt = consts.dt
    k_safe = 1 if MUTATION_ONE_CYCLE in mutations else 2
    ext_safe, ext2 = lookahead(consts, k_safe), lookahead(consts, 2)
    lead_safe, lead2 = k_safe * dt, 2 * dt

    def surely(s, p):
        x, v = ext_safe(s["x"], s["v"])
        return phi(x, v, s["x2"] + s["v2"] * lead_safe, s["v2"])

    def maybe(s, p):
        x, v = ext2(s["x"], s["v"])
        return not phi(x, v, s["x2"] + s["v2"] * lead2, s["v2"])
    return Atom("surely_safe_next", surely), Atom("maybe_unsafe_next", maybe)


def build_m31(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    mutations = frozenset(mutations)
    m30 = build_m30(consts, mutations)
    le, _, _ = arith_ops(consts)
    phi = phi3_predicate(consts)
    ext1 = lookahead(consts, 1)
    v_max, dt = consts.v_max, consts.dt
    advance = _advance(consts)
    run = run_guards(consts)
    without_precond = tuple(a for a in run if a.label != "preserve_precond")
    surely, maybe = _switch_atoms(consts, mutations)
    ac_on = Atom("AC_operating", lambda s, p: s["ctrl"] == AC)
    bc_on = Atom("BC_operating", lambda s, p: s["ctrl"] == BC)
    no_accel = Atom("no_acceleration", lambda s, p: le(p["p_v"], s["v_bc0"]))

    def switching(s):
        if s["ctrl"] != AC:
            return True
        x, v = ext1(s["x"], s["v"])
        return phi(x, v, s["x2"] + s["v2"] * dt, s["v2"])

    def to_bc(s, p):
        t = advance(s, p)
        t["ctrl"], t["v_bc0"] = BC, p["p_v"]
        return t

    def to_ac(s, p):
        t = advance(s, p)
        t["ctrl"] = AC
        return t

    invariants = (
        Invariant("ctrl_types", lambda s: s["ctrl"] in (AC, BC) and is_number(s["v_bc0"])),
        Invariant("vsvbcinit_regulated", lambda s: le(0, s["v_bc0"]) and le(s["v_bc0"], v_max)),
        Invariant("bc_no_accel", lambda s: s["ctrl"] != BC or le(s["v"], s["v_bc0"])),
        Invariant("switching", switching),
    )
    events = (
        EventDef("AC->AC", run + (ac_on, surely), advance, refines="run"),
        EventDef("AC->BC", without_precond + (ac_on, maybe), to_bc, refines="run"),
        EventDef("BC->BC", run + (bc_on, no_accel, maybe), advance, refines="run"),
        EventDef("BC->AC", run + (bc_on, no_accel, surely), to_ac, refines="run"),
    )
    return MachineDef("M31", FAMILY, m30.variables + ("ctrl", "v_bc0"), invariants, events,
                      m30, consts, mutations=mutations)


def build_m32(consts: ScenarioConstants, mutations=frozenset()) -> MachineDef:
    mutations = frozenset(mutations)
    m31 = build_m31(consts, mutations)
    le, lt, eq = arith_ops(consts)
    x_tgt, b, dt, t_lc = consts.x_tgt, consts.b_min, consts.dt, consts.t_lc
    inv2b = 1 / (2 * b)
    surely, maybe = _switch_atoms(consts, mutations)
    bc_on = Atom("BC_operating", lambda s, p: s["ctrl"] == BC)
    in_lc = Atom("lc_in_progress", lambda s, p: lt(s["t_lce"], t_lc))
    witness = plan_params(consts)
    after = timers_after(consts)
    to_bc_abstract = m31.event("AC->BC").action

    invariants = (
        Invariant("timer_types", lambda s: is_number(s["tc"]) and is_number(s["tb"])
                  and le(0, s["tc"]) and le(0, s["tb"])),
        Invariant("v_in_BC_cruise",
                  lambda s: s["ctrl"] != BC or not s["tc"] > 0 or eq(s["v"], s["v_bc0"])),
        Invariant("handoff_in_BC", lambda s: s["ctrl"] != BC
                  or le(s["v"] * s["v"] * inv2b, x_tgt - s["x"] - s["tc"] * s["v"])),
        Invariant("schedule_in_LC", lambda s: s["ctrl"] != BC
                  or eq(s["tc"] + s["tb"], (t_lc - s["t_lce"]) * dt)),
    )

    def run_to_bc(s, p):
        t = to_bc_abstract(s, p)
        remaining = (t_lc - t["t_lce"]) * dt
        cruise = (x_tgt - p["p_x"]) / p["p_v"] - p["p_v"] * inv2b
        if remaining < cruise:
            cruise = remaining
        t["tc"], t["tb"] = cruise, remaining - cruise
        return t

    def stop_to_bc(s, p):
        t = to_bc_abstract(s, p)
        t["tc"] = t["tc"] * 0
        t["tb"] = (t_lc - t["t_lce"]) * dt
        return t

    def bc_step(target):
        def action(s, p):
            t = dict(s)
            t["x"], t["v"] = p["p_x"], p["p_v"]
            t["x2"] = s["x2"] + s["v2"] * dt
            n = s["t_lce"] + 1
            t["t_lce"] = n if n < t_lc else t_lc
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
    braking = Atom("will_brake", lambda s, p: lt(s["tc"], dt))
    moving = Atom("moving", lambda s, p: s["v"] > 0)
    stopped = Atom("stopped", lambda s, p: s["v"] == 0)
    plan = Atom("plan_xv", plan_xv)

    ac_bc = m31.event("AC->BC").guard
    events = (
        EventDef("AC_run->AC", m31.event("AC->AC").guard, m31.event("AC->AC").action,
                 refines="AC->AC"),
        EventDef("AC_run->BC", ac_bc + (Atom("will_run_more", lambda s, p: p["p_v"] > 0),),
                 run_to_bc, refines="AC->BC"),
        EventDef("AC_stop->BC", ac_bc + (Atom("will_stop", lambda s, p: p["p_v"] == 0),),
                 stop_to_bc, refines="AC->BC"),
        EventDef("BC_cruise->BC", (bc_on, in_lc, maybe, cruise_more, cruise_xv), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_brake->BC", (bc_on, in_lc, maybe, braking, moving, plan), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_stop->BC", (bc_on, in_lc, maybe, braking, stopped, plan), bc_step(BC),
                 refines="BC->BC", witness=witness),
        EventDef("BC_cruise->AC", (bc_on, in_lc, surely, cruise_more, cruise_xv), bc_step(AC),
                 refines="BC->AC", witness=witness),
        EventDef("BC_brake->AC", (bc_on, in_lc, surely, braking, moving, plan), bc_step(AC),
                 refines="BC->AC", witness=witness),
        EventDef("BC_stop->AC", (bc_on, in_lc, surely, braking, stopped, plan), bc_step(AC),
                 refines="BC->AC", witness=witness),
    )
    return MachineDef("M32", FAMILY, m31.variables + ("tc", "tb"), invariants, events,
                      m31, consts, mutations=mutations)
