"""Guarded-event encoding of refinement machines.

A machine state is a *valuation*: a plain dict from variable name to value.
Event parameters are a second dict (``p_x``, ``p_v``).  Guards are tuples of
labelled atoms so that a failing guard can be named and so that a refined
event's guard can be compared atom by atom with its abstract event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

from ..errors import ContractError, ModelError

Valuation = Dict[str, object]
Params = Dict[str, object]


@dataclass(frozen=True)
class Atom:
    label: str
    pred: Callable[[Valuation, Params], bool]

    def __call__(self, s, p) -> bool:
        return self.pred(s, p)


@dataclass(frozen=True)
class Invariant:
    label: str
    pred: Callable[[Valuation], bool]

    def __call__(self, s) -> bool:
        return self.pred(s)


@dataclass(frozen=True)
class EventDef:
    """One guarded event.

    ``witness`` computes the parameters of events whose guard pins them down
    (baseline-controller manoeuvres); events with free parameters leave it
    ``None`` and are explored by sampling.
    """

    name: str
    guard: Tuple[Atom, ...]
    action: Callable[[Valuation, Params], Valuation]
    refines: Optional[str] = None
    witness: Optional[Callable[[Valuation], Params]] = None

    def holds(self, s: Valuation, p: Params) -> bool:
        for atom in self.guard:
            if not atom.pred(s, p):
                return False
        return True

    def failing_guard(self, s: Valuation, p: Params) -> Optional[str]:
        for atom in self.guard:
            if not atom.pred(s, p):
                return atom.label
        return None

    def atom(self, label: str) -> Atom:
        for a in self.guard:
            if a.label == label:
                return a
        raise KeyError(label)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(a.label for a in self.guard)


@dataclass(frozen=True)
class MachineDef:
    """A machine: variables, its own invariants, events, optional abstraction.

    ``space`` is the family-specific sampling description used by the
    proof-obligation checker and by ``enabled_events``.
    """

    name: str
    family: str
    variables: Tuple[str, ...]
    invariants: Tuple[Invariant, ...]
    events: Tuple[EventDef, ...]
    abstract: Optional["MachineDef"] = None
    consts: object = None
    space: object = None
    mutations: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        labels = [inv.label for inv in self.all_invariants]
        if len(labels) != len(set(labels)):
            raise ModelError(f"{self.name}: invariant names are not unique: {labels}")
        names = [e.name for e in self.events]
        if len(names) != len(set(names)):
            raise ModelError(f"{self.name}: duplicate event names")
        for e in self.events:
            if e.refines is None:
                continue
            if self.abstract is None:
                raise ModelError(f"{self.name}.{e.name} refines {e.refines} but the machine has no abstraction")
            if e.refines not in {a.name for a in self.abstract.events}:
                raise ModelError(f"{self.name}.{e.name} refines unknown event {e.refines}")

    @property
    def all_invariants(self) -> Tuple[Invariant, ...]:
        inherited = self.abstract.all_invariants if self.abstract is not None else ()
        return inherited + self.invariants

    @property
    def depth(self) -> int:
        return 0 if self.abstract is None else self.abstract.depth + 1

    def event(self, name: str) -> EventDef:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(f"{self.name} has no event {name!r}")

    def invariant(self, label: str) -> Invariant:
        for inv in self.all_invariants:
            if inv.label == label:
                return inv
        raise KeyError(f"{self.name} has no invariant {label!r}")

    def invariants_hold(self, s: Valuation) -> bool:
        for inv in self.all_invariants:
            if not inv.pred(s):
                return False
        return True

    def violated_invariants(self, s: Valuation):
        return [inv.label for inv in self.all_invariants if not inv.pred(s)]


def refinement_pairs(concrete: MachineDef, abstract: MachineDef):
    """Pair every concrete event with the abstract event it refines."""
    if concrete.abstract is None or concrete.abstract.name != abstract.name:
        raise ModelError(f"{concrete.name} does not refine {abstract.name}")
    pairs = []
    for e in concrete.events:
        if e.refines is None:
            raise ModelError(f"{concrete.name}.{e.name} refines nothing")
        try:
            pairs.append((e, abstract.event(e.refines)))
        except KeyError:
            raise ModelError(f"{concrete.name}.{e.name} has dangling refines {e.refines!r}") from None
    return pairs


def apply_valuation(m: MachineDef, e: EventDef, s: Valuation, p: Params) -> Valuation:
    """Fire ``e`` on a valuation after checking its guard."""
    label = e.failing_guard(s, p)
    if label is not None:
        raise ContractError(f"{m.name}.{e.name}: guard {label} is false", label=label)
    return e.action(s, p)
