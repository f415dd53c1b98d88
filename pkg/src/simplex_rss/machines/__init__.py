"""Guarded-event machines for subscenarios S4 (M40-M42) and S3 (M30-M32)."""

from __future__ import annotations

import json
from dataclasses import replace
from typing import Callable, Iterable, List, Tuple

from ..errors import FeatureError
from ..kinematics import EXACT, ScenarioConstants, VehicleKinematics, exact
from ..state import BCSchedule, Ctrl, WorldState, lane_change_lanes
from .common import MUTATION_ONE_CYCLE, MUTATIONS
from .core import (Atom, EventDef, Invariant, MachineDef, Params, Valuation, apply_valuation,
                   refinement_pairs)
from .s3 import build_m30, build_m31, build_m32
from .s4 import build_m40, build_m41, build_m42
from .sampling import CandidateSampler, SampleSpace, param_candidates

__all__ = [
    "Atom", "EventDef", "Invariant", "MachineDef", "MACHINE_NAMES", "MUTATIONS",
    "MUTATION_ONE_CYCLE", "CandidateSampler", "SampleSpace", "apply_event", "apply_valuation",
    "build_machine", "enabled_events", "from_valuation", "initial_valuation",
    "machine_inventory", "refinement_pairs", "to_valuation", "write_inventory",
]

_BUILDERS = {
    "M40": build_m40, "M41": build_m41, "M42": build_m42,
    "M30": build_m30, "M31": build_m31, "M32": build_m32,
}
MACHINE_NAMES = tuple(_BUILDERS)


def build_machine(name: str, consts: ScenarioConstants = None, mutations=()) -> MachineDef:
    """Build machine ``name`` (``M40`` ... ``M32``) for the given constants."""
    key = str(name).upper().replace("_", "").replace(",", "")
    if key not in _BUILDERS:
        raise FeatureError(f"unknown machine {name!r}; expected one of {', '.join(MACHINE_NAMES)}")
    unknown = set(mutations) - set(MUTATIONS)
    if unknown:
        raise FeatureError(f"unknown mutation(s): {', '.join(sorted(unknown))}")
    return _BUILDERS[key](consts or ScenarioConstants(), frozenset(mutations))


def to_valuation(m: MachineDef, state: WorldState) -> Valuation:
    """Project a world snapshot onto the variables of ``m``."""
    c = m.consts
    full = {
        "x": state.sv.x, "v": state.sv.v,
        "ctrl": state.ctrl, "v_bc0": state.v_bc0,
        "tc": state.plan.t_cruise, "tb": state.plan.t_brake,
        "t_lce": state.t_lce,
    }
    pov2 = state.pov(2)
    if pov2 is not None:
        full["x2"], full["v2"] = pov2.x, pov2.v
    s = {}
    for k in m.variables:
        if k not in full:
            raise FeatureError(f"{m.name} needs {k!r}, which the state does not carry")
        value = full[k]
        s[k] = value if k == "ctrl" else c.num(value)
    return s


def from_valuation(m: MachineDef, s: Valuation, template: WorldState) -> WorldState:
    """Write a valuation back into a copy of ``template``.

    ``a_cmd`` of the subject vehicle is set to the mean acceleration of the
    step from ``template`` to ``s``.
    """
    c = m.consts
    a_cmd = (s["v"] - template.sv.v) / c.dt
    changes = {"sv": VehicleKinematics(s["x"], s["v"], a_cmd)}
    if "ctrl" in s:
        changes["ctrl"] = Ctrl(s["ctrl"])
        changes["v_bc0"] = s["v_bc0"]
        changes["actor"] = template.ctrl
    if "tc" in s:
        changes["plan"] = BCSchedule(0 * s["tc"], s["tc"], s["tb"], template.plan.last_response_id)
    if "x2" in s:
        # POVs other than POV2 are not machine variables but still move
        changes["povs"] = tuple(
            replace(p, x=s["x2"]) if p.id == 2 else replace(p, x=p.x + p.v * c.dt)
            for p in template.povs)
        changes["t_lce"] = s["t_lce"]
        changes["lanes"] = lane_change_lanes(s["t_lce"], c.t_lc)
    return template.replace(**changes)


def initial_valuation(m: MachineDef, x0, v0, **extra) -> Valuation:
    """Valuation produced by the initialisation event (``init_sv``)."""
    c = m.consts
    s = {"x": c.num(x0), "v": c.num(v0)}
    defaults = {"ctrl": Ctrl.AC, "v_bc0": 0, "tc": 0, "tb": 0, "t_lce": 0, "x2": None, "v2": None}
    for k in m.variables:
        if k in s:
            continue
        value = extra.get(k, defaults[k])
        if value is None:
            raise FeatureError(f"initialisation of {m.name} needs {k!r}")
        s[k] = value if k == "ctrl" else c.num(value)
    return s


def apply_event(m: MachineDef, state: WorldState, e, params: Params = None) -> WorldState:
    """Fire event ``e`` (object or name) of ``m`` on a world snapshot.

    Events whose parameters are determined by the state (baseline-controller
    manoeuvres) may omit ``params``.  A false guard raises ``ContractError``
    naming the first failing guard atom.
    """
    if isinstance(e, str):
        e = m.event(e)
    s = to_valuation(m, state)
    if params is None:
        if e.witness is None:
            raise FeatureError(f"{m.name}.{e.name} has free parameters; pass params")
        params = e.witness(s)
    params = {k: m.consts.num(v) for k, v in params.items()}
    return from_valuation(m, apply_valuation(m, e, s, params), state)


def enabled_events(m: MachineDef, state: WorldState, seed=0,
                   n_candidates: int = 64) -> List[Tuple[EventDef, Callable[[], Params]]]:
    """Events of ``m`` whose guard is satisfiable at ``state``.

    Each event comes with a zero-argument sampler returning a guard-satisfying
    parameter dict.  Free parameters are searched over a deterministic set of
    candidates (cruise, maximal acceleration, comfortable and emergency
    braking, holding, plus random points of the physical box); an event is
    reported only if some candidate satisfies its guard.
    """
    exact_m = m if m.consts.arith == EXACT else build_machine(
        m.name, m.consts.with_arith(EXACT), m.mutations)
    s = {k: (v if k == "ctrl" else exact(v)) for k, v in to_valuation(exact_m, state).items()}
    out = []
    free = None
    for e in exact_m.events:
        if e.witness is not None:
            p = e.witness(s)
            if e.holds(s, p):
                out.append((e, _constant(p)))
            continue
        if free is None:
            free = param_candidates(exact_m, s, seed, n_candidates)
        good = [p for p in free if e.holds(s, p)]
        if good:
            out.append((e, _cycler(good)))
    return out


def _constant(p):
    return lambda: dict(p)


def _cycler(items):
    state = {"i": 0}

    def next_params():
        p = items[state["i"] % len(items)]
        state["i"] += 1
        return dict(p)
    return next_params


def machine_inventory(machines: Iterable[MachineDef]):
    """One JSON-ready record per machine: variables, invariants, events, refinement edges."""
    records = []
    for m in machines:
        records.append({
            "machine": m.name,
            "family": m.family,
            "refines": m.abstract.name if m.abstract is not None else None,
            "variables": list(m.variables),
            "invariants": [inv.label for inv in m.invariants],
            "inherited_invariants": [inv.label for inv in m.all_invariants[:len(m.all_invariants) - len(m.invariants)]],
            "events": [
                {"name": e.name, "refines": e.refines, "guard": list(e.labels),
                 "parameters": "determined" if e.witness is not None else "free"}
                for e in m.events
            ],
            "mutations": sorted(m.mutations),
        })
    return records


def write_inventory(machines: Iterable[MachineDef], fh) -> int:
    n = 0
    for record in machine_inventory(machines):
        fh.write(json.dumps(record, sort_keys=True) + "\n")
        n += 1
    return n
