"""Candidate generation for proof-obligation checking and event enabling.

Candidates are exact rationals on a grid of small denominators.  A share of
the draws (``boundary_bias``) is placed on guard-equality manifolds: a
coordinate is solved so that a precondition, switching or lookahead
inequality holds with equality, or so that a baseline-controller identity
(``x_in_BC``, ``schedule_in_LC``) is met exactly.  Without that structure the
concrete machines' hypotheses are measure-zero sets and every PO would come
out vacuous.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from gmpy2 import mpq

from ..kinematics import EXACT, ScenarioConstants, brake_for
from ..state import Ctrl
from .core import EventDef, MachineDef

AC, BC = Ctrl.AC, Ctrl.BC
DENOMINATORS = (1, 2, 4, 8, 16, 32, 64)
ZERO = mpq(0)


@dataclass(frozen=True)
class SampleSpace:
    """Boxes and knobs for candidate generation (all bounds inclusive).

    ``None`` bounds default to the scenario constants: ``x`` in
    ``[0, x_tgt]``, ``v`` in ``[0, v_max]``.  ``gap_max`` bounds the sampled
    distance to POV2 and ``timer_max`` the free timers of AC-mode states.
    """

    x_lo: object = None
    x_hi: object = None
    v_lo: object = None
    v_hi: object = None
    gap_max: object = 150
    timer_max: object = 30
    max_denominator: int = 64
    boundary_bias: float = 0.3

    def resolved(self, consts: ScenarioConstants) -> "SampleSpace":
        q = mpq
        return SampleSpace(
            q(0) if self.x_lo is None else q(self.x_lo),
            consts.x_tgt if self.x_hi is None else q(self.x_hi),
            q(0) if self.v_lo is None else q(self.v_lo),
            consts.v_max if self.v_hi is None else q(self.v_hi),
            q(self.gap_max), q(self.timer_max), self.max_denominator, self.boundary_bias,
        )


def event_ctrl_hint(event: EventDef) -> Optional[Ctrl]:
    labels = event.labels
    if "AC_operating" in labels:
        return AC
    if "BC_operating" in labels:
        return BC
    return None


class CandidateSampler:
    """Draws ``(valuation, params)`` candidates for one event of one machine.

    The stream depends only on ``(seed, machine name, event name)`` so a PO
    can be checked alone or together with its siblings and see the same
    points.
    """

    def __init__(self, machine: MachineDef, event: EventDef, seed=0,
                 space: Optional[SampleSpace] = None):
        consts = machine.consts
        if consts.arith != EXACT:
            consts = consts.with_arith(EXACT)
        self.c = consts
        self.machine = machine
        self.event = event
        self.space = (space or SampleSpace()).resolved(consts)
        self.rng = random.Random(f"{seed}/{machine.name}/{event.name}")
        self.dens = tuple(d for d in DENOMINATORS if d <= self.space.max_denominator) or (1,)
        vars_ = set(machine.variables)
        self.has_ctrl = "ctrl" in vars_
        self.has_timers = "tc" in vars_
        self.s3 = "x2" in vars_
        self.ctrl_hint = event_ctrl_hint(event)
        c = consts
        self.inv2b = 1 / (2 * c.b_min)
        self.invb = 1 / c.b_min
        self.invbmax = 1 / c.b_max

    # -- scalar helpers --------------------------------------------------
    def grid(self, lo, hi, specials=()):
        rng = self.rng
        if specials and rng.random() < 0.2:
            value = specials[rng.randrange(len(specials))]
            if lo <= value <= hi:
                return mpq(value)
        if hi <= lo:
            return mpq(lo)
        den = self.dens[rng.randrange(len(self.dens))]
        a, b = math.ceil(lo * den), math.floor(hi * den)
        if a > b:
            return mpq(lo)
        return mpq(rng.randint(a, b), den)

    def nudge(self, value):
        """Move ``value`` by a tiny grid step, or keep it exact."""
        r = self.rng.random()
        if r < 0.6:
            return value
        step = mpq(1, self.space.max_denominator)
        return value + step if r < 0.8 else value - step

    def ext(self, x, v, k):
        c = self.c
        h = k * c.dt
        return x + v * h + c.a_max * h * h / 2, v + c.a_max * h

    def boundary(self) -> bool:
        return self.rng.random() < self.space.boundary_bias

    # -- state generation ------------------------------------------------
    def draw_ctrl(self):
        if self.ctrl_hint is not None:
            return self.ctrl_hint if self.rng.random() < 0.95 else (BC if self.ctrl_hint == AC else AC)
        return AC if self.rng.random() < 0.5 else BC

    def x_on_phi4(self, v, k):
        """x such that phi4 holds with equality after a k-cycle lookahead."""
        c = self.c
        h = k * c.dt
        vk = v + c.a_max * h
        return c.x_tgt - vk * vk * self.inv2b - v * h - c.a_max * h * h / 2

    def draw_x(self, v):
        sp = self.space
        if self.boundary():
            r = self.rng.randrange(5)
            if r < 3:
                return self.nudge(self.x_on_phi4(v, r))
            return sp.x_lo if r == 3 else sp.x_hi
        return self.grid(sp.x_lo, sp.x_hi)

    def draw_v(self, hi=None):
        sp, c = self.space, self.c
        hi = sp.v_hi if hi is None else min(hi, sp.v_hi)
        return self.grid(sp.v_lo, hi, (0, hi, c.b_min * c.dt, c.a_max * c.dt, hi - c.a_max * c.dt))

    def draw_v_bc0(self, ctrl, v):
        sp = self.space
        if ctrl == BC:
            if self.rng.random() < 0.6:
                return v
            return self.grid(v, sp.v_hi, (sp.v_hi,))
        return self.grid(ZERO, sp.v_hi, (0, sp.v_hi))

    def draw_free_timers(self):
        tm = self.space.timer_max
        tc = self.grid(ZERO, tm, (0, 1))
        tb = self.grid(ZERO, tm, (0,))
        if tc > 0 and tb == 0 and self.rng.random() < 0.9:
            tb = self.grid(mpq(1, 64), tm)
        return tc, tb

    def draw_state(self):
        return self.draw_state_s3() if self.s3 else self.draw_state_s4()

    def draw_state_s4(self):
        c = self.c
        s = {}
        ctrl = self.draw_ctrl() if self.has_ctrl else None
        v = self.draw_v()
        if self.has_timers and ctrl == BC and self.rng.random() < 0.9:
            return self._bc_state_s4(v)
        x = self.draw_x(v)
        s["x"], s["v"] = x, v
        if self.has_ctrl:
            s["ctrl"] = ctrl
            s["v_bc0"] = self.draw_v_bc0(ctrl, v)
        if self.has_timers:
            s["tc"], s["tb"] = self.draw_free_timers()
        return s

    def _bc_state_s4(self, v):
        """BC state satisfying the manoeuvre identities of M42 exactly."""
        c, rng = self.c, self.rng
        s = {"ctrl": BC, "v": v, "tb": v / c.b_min}
        if v == 0:
            s["x"] = self.draw_x(v)
            s["tc"] = ZERO
            s["v_bc0"] = self.draw_v_bc0(BC, v)
            return s
        stop_dist = v * v * self.inv2b
        tc_max = (c.x_tgt - self.space.x_lo - stop_dist) / v
        if tc_max < 0:
            tc_max = ZERO
        r = rng.randrange(6)
        if r == 0:
            tc = ZERO
        elif r == 1:
            tc = self.grid(mpq(1, 64), c.dt - mpq(1, 64))
        elif r == 2:
            tc = c.dt
        elif r == 3:
            # put the two-cycle lookahead exactly on its phi4 boundary
            tc = (c.x_tgt - self.x_on_phi4(v, 2) - stop_dist) / v
        elif r == 4:
            tc = (c.x_tgt - self.x_on_phi4(v, 1) - stop_dist) / v
        else:
            tc = self.grid(ZERO, tc_max, (tc_max,))
        if tc < 0 or tc > tc_max:
            tc = self.grid(ZERO, tc_max)
        s["tc"] = tc
        s["x"] = c.x_tgt - tc * v - stop_dist
        s["v_bc0"] = v if tc > 0 or rng.random() < 0.6 else self.grid(v, self.space.v_hi)
        return s

    def draw_state_s3(self):
        c, rng = self.c, self.rng
        sp = self.space
        ctrl = self.draw_ctrl() if self.has_ctrl else None
        v2 = self.grid(c.v_min, c.v_max, (c.v_min, c.v_max))
        v = self.draw_v(v2 if rng.random() < 0.9 else None)
        t_lc = int(c.t_lc)
        if rng.random() < 0.9:
            t_lce = mpq(rng.randint(0, t_lc - 1))
        else:
            t_lce = mpq(t_lc)
        s = {"v": v, "v2": v2, "t_lce": t_lce}
        bc_struct = self.has_timers and ctrl == BC and rng.random() < 0.9
        if bc_struct:
            x, tc, tb = self._bc_timers_s3(v, t_lce)
            s["tc"], s["tb"] = tc, tb
        else:
            x = self.draw_x(v)
            if self.has_timers:
                s["tc"], s["tb"] = self.draw_free_timers()
        s["x"] = x
        s["x2"] = self.draw_x2(x, v, v2)
        if self.has_ctrl:
            s["ctrl"] = ctrl
            if bc_struct and s["tc"] > 0:
                s["v_bc0"] = v
            else:
                s["v_bc0"] = self.draw_v_bc0(ctrl, v)
        return s

    def _bc_timers_s3(self, v, t_lce):
        """(x, tc, tb) meeting schedule_in_LC exactly and handoff_in_BC."""
        c, rng = self.c, self.rng
        remaining = (c.t_lc - t_lce) * c.dt
        stop_dist = v * v * self.inv2b
        r = rng.randrange(4)
        if v == 0:
            x = self.draw_x(v)
            tc = ZERO if r < 2 else self.grid(ZERO, remaining, (remaining,))
            return x, tc, remaining - tc
        if r == 0:
            # handoff identity with equality
            tc = self.grid(ZERO, remaining, (0, remaining, c.dt))
            x = c.x_tgt - tc * v - stop_dist
            if x < self.space.x_lo:
                tc = ZERO
                x = c.x_tgt - stop_dist
            return self.nudge_down(x), tc, remaining - tc
        x = self.draw_x(v)
        room = (c.x_tgt - x - stop_dist) / v
        if room < 0:
            room = ZERO
        hi = min(room, remaining)
        tc = self.grid(ZERO, hi, (0, hi, c.dt, c.dt - mpq(1, 64)))
        return x, tc, remaining - tc

    def nudge_down(self, value):
        if self.rng.random() < 0.5:
            return value
        return value - mpq(1, self.space.max_denominator)

    def draw_x2(self, x, v, v2):
        c, rng = self.c, self.rng
        if self.boundary():
            k = rng.randrange(3)
            xk, vk = self.ext(x, v, k)
            # polynomial gap clause with equality after a k-cycle lookahead
            x2 = xk + (vk * vk * self.invb - v2 * v2 * self.invbmax) / 2 - k * v2 * c.dt
            x2 = self.nudge(x2)
            if x2 > x:
                return x2
            return x + self.grid(mpq(1, 64), mpq(2))
        return x + self.grid(mpq(1, 64), self.space.gap_max, (1, 2, 5))

    # -- parameters --------------------------------------------------------
    def draw_params(self, s):
        if self.event.witness is not None:
            w = self.event.witness(s)
            if self.rng.random() < 0.02:
                # occasionally perturb to exercise guards that pin parameters
                w = {"p_x": w["p_x"] + mpq(1, 64), "p_v": w["p_v"]}
            return w
        return self.free_params(s)

    def free_params(self, s):
        c, rng = self.c, self.rng
        x, v, dt = s["x"], s["v"], c.dt
        x_hi = x + v * dt + c.a_max * dt * dt / 2
        v_lo, v_hi = v - c.b_max * dt, v + c.a_max * dt
        if v_lo < 0 and rng.random() < 0.9:
            v_lo = ZERO
        r = rng.random()
        if r < 0.1:
            return {"p_x": x_hi, "p_v": v_hi}
        if r < 0.18:
            return {"p_x": x + v * dt, "p_v": v}
        if r < 0.26:
            step = brake_for(x, v, c.b_min, dt)
            return {"p_x": step.x, "p_v": step.v}
        if r < 0.32:
            return {"p_x": self.grid(x, x_hi, (x, x_hi)), "p_v": ZERO}
        if r < 0.40 and v_lo <= v_hi:
            # precondition boundary in the parameters
            p_v = self.grid(max(v_lo, ZERO), v_hi)
            p_x = c.x_tgt - p_v * p_v * self.inv2b
            if x <= p_x <= x_hi:
                return {"p_x": p_x, "p_v": p_v}
        if self.has_ctrl and s.get("ctrl") == BC and r < 0.55:
            top = min(v_hi, s["v_bc0"])
            p_v = self.grid(v_lo, top, (v_lo, top)) if v_lo <= top else v_lo
        else:
            p_v = self.grid(v_lo, v_hi, (v_lo, v_hi, v))
        p_x = self.grid(x, x_hi, (x, x_hi, x + v * dt))
        return {"p_x": p_x, "p_v": p_v}

    def draw(self):
        s = self.draw_state()
        return s, self.draw_params(s)


def param_candidates(machine: MachineDef, s, seed=0, n: int = 64):
    """Deterministic list of parameter candidates for free-parameter events at ``s``."""
    sampler = CandidateSampler(machine, machine.events[0], seed)
    sampler.rng = random.Random(f"{seed}/params")
    c = sampler.c
    x, v, dt = s["x"], s["v"], c.dt
    fixed = [
        (x + v * dt, v),
        (x + v * dt + c.a_max * dt * dt / 2, v + c.a_max * dt),
        tuple(brake_for(x, v, c.b_min, dt)),
        tuple(brake_for(x, v, c.b_max, dt)),
        (x, v * 0),
    ]
    out = [{"p_x": px, "p_v": pv} for px, pv in fixed]
    for _ in range(n):
        out.append(sampler.free_params(s))
    return out
