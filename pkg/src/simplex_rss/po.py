"""Proof obligations of the machines and their randomized discharge.

Two kinds are generated.  Invariant preservation, for an event ``e`` and an
invariant ``I`` of the machine::

    axioms and all invariants and guard(e)  =>  I(action(e))

and guard strengthening, for a concrete event ``e_c`` refining ``e_a``::

    axioms and all invariants and guard(e_c)  =>  guard(e_a)

The checker draws candidates from ``machines.sampling``, evaluates in exact
arithmetic, and reports PASS, FAIL (with a shrunk counterexample) or VACUOUS
(the hypothesis was never met).  Sampling can refute an obligation but not
prove it.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import ContractError
from .kinematics import EXACT, ScenarioConstants
from .machines import MachineDef, build_machine
from .machines.core import EventDef
from .machines.sampling import CandidateSampler, SampleSpace


class POKind(str, enum.Enum):
    INV = "INV_PRESERVATION"
    GS = "GUARD_STRENGTHENING"

    def __str__(self):
        return self.value


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    VACUOUS = "VACUOUS"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ProofObligation:
    kind: POKind
    machine: MachineDef
    event: EventDef
    target: str
    hypothesis: Callable = field(repr=False, compare=False)
    conclusion: Callable = field(repr=False, compare=False)

    @property
    def id(self) -> str:
        tag = "INV" if self.kind == POKind.INV else "GS"
        return f"{self.machine.name}/{self.event.name}/{tag}/{self.target}"

    def violated_by(self, s, p) -> bool:
        return self.hypothesis(s, p) and not self.conclusion(s, p)


@dataclass
class Verdict:
    po_id: str
    kind: POKind
    machine: str
    event: str
    target: str
    status: Status
    samples: int
    hits: int
    seed: object
    counterexample: Optional[Tuple[dict, dict]] = None

    @property
    def vacuity_ratio(self) -> float:
        """Fraction of tested samples that met the hypothesis."""
        return self.hits / self.samples if self.samples else 0.0

    def to_json(self) -> dict:
        cex = None
        if self.counterexample is not None:
            s, p = self.counterexample
            cex = {"state": _plain(s), "params": _plain(p)}
        return {
            "po": self.po_id, "kind": str(self.kind), "machine": self.machine,
            "event": self.event, "target": self.target, "status": str(self.status),
            "samples": self.samples, "hits": self.hits,
            "hit_ratio": round(self.vacuity_ratio, 6), "seed": self.seed,
            "counterexample": cex,
        }


def _plain(d: dict) -> dict:
    return {k: str(v) for k, v in sorted(d.items())}


def _hypothesis(m: MachineDef, e: EventDef):
    invariants = tuple(inv.pred for inv in m.all_invariants)
    guard = tuple(a.pred for a in e.guard)

    def hyp(s, p):
        for inv in invariants:
            if not inv(s):
                return False
        for g in guard:
            if not g(s, p):
                return False
        return True
    return hyp


def _inv_conclusion(e: EventDef, inv):
    action, pred = e.action, inv.pred

    def concl(s, p):
        try:
            return bool(pred(action(s, p)))
        except ArithmeticError:
            return False
    return concl


def _gs_conclusion(abstract_event: EventDef):
    return lambda s, p: abstract_event.holds(s, p)


def _exact_machine(m: MachineDef) -> MachineDef:
    if m.consts.arith == EXACT:
        return m
    return build_machine(m.name, m.consts.with_arith(EXACT), m.mutations)


def generate_pos(m: MachineDef, include_inherited: bool = False) -> List[ProofObligation]:
    """All proof obligations of ``m`` (initialisation excluded).

    By default only the machine's own invariants are targets; inherited ones
    are discharged at the machine that introduces them.
    """
    m = _exact_machine(m)
    pos = []
    targets = m.all_invariants if include_inherited else m.invariants
    abstract_events = {}
    if m.abstract is not None:
        abstract_events = {e.name: e for e in m.abstract.events}
    for e in m.events:
        hyp = _hypothesis(m, e)
        for inv in targets:
            pos.append(ProofObligation(POKind.INV, m, e, inv.label, hyp, _inv_conclusion(e, inv)))
        if e.refines is not None and e.refines in abstract_events:
            ea = abstract_events[e.refines]
            pos.append(ProofObligation(POKind.GS, m, e, ea.name, hyp, _gs_conclusion(ea)))
    return pos


def check_pos(pos: Sequence[ProofObligation], budget: int, seed=0,
              space: Optional[SampleSpace] = None, shrink_cex: bool = True) -> List[Verdict]:
    """Check several obligations, sharing one candidate stream per event.

    Verdicts come back in the order of ``pos`` and are identical to checking
    each obligation alone with the same ``budget`` and ``seed``.
    """
    if budget < 1:
        raise ContractError("budget must be >= 1")
    groups: Dict[Tuple[str, str], List[int]] = {}
    for i, po in enumerate(pos):
        groups.setdefault((id(po.machine), po.event.name, id(po.hypothesis)), []).append(i)
    verdicts: List[Optional[Verdict]] = [None] * len(pos)
    for idxs in groups.values():
        for i, v in zip(idxs, _check_group([pos[i] for i in idxs], budget, seed, space, shrink_cex)):
            verdicts[i] = v
    return verdicts


def check_po(po: ProofObligation, budget: int, seed=0, space: Optional[SampleSpace] = None,
             shrink_cex: bool = True) -> Verdict:
    return check_pos([po], budget, seed, space, shrink_cex)[0]


def _check_group(pos, budget, seed, space, shrink_cex):
    first = pos[0]
    sampler = CandidateSampler(first.machine, first.event, seed, space)
    hyp = first.hypothesis
    n = len(pos)
    hits = [0] * n
    failed_at: List[Optional[int]] = [None] * n
    cex: List[Optional[tuple]] = [None] * n
    open_ = list(range(n))
    for k in range(1, budget + 1):
        s, p = sampler.draw()
        if not hyp(s, p):
            continue
        still = []
        for j in open_:
            hits[j] += 1
            if pos[j].conclusion(s, p):
                still.append(j)
            else:
                failed_at[j] = k
                cex[j] = (s, p)
        open_ = still
        if not open_:
            break
    out = []
    for j, po in enumerate(pos):
        if failed_at[j] is not None:
            point = shrink(cex[j], po, space) if shrink_cex else cex[j]
            status, samples = Status.FAIL, failed_at[j]
        else:
            point = None
            samples = budget
            status = Status.PASS if hits[j] else Status.VACUOUS
        out.append(Verdict(po.id, po.kind, po.machine.name, po.event.name, po.target, status,
                           samples, hits[j], seed, point))
    return out


# -- shrinking ---------------------------------------------------------------

_BISECT_STEPS = 24
_DENOMINATORS = (1, 2, 3, 4, 5, 8, 10, 16, 32, 64, 100, 128, 1000, 1024)


def _numeric_keys(s):
    return [k for k, v in s.items() if not isinstance(v, str)]


def shrink(cex, po: ProofObligation, space: Optional[SampleSpace] = None):
    """Move a counterexample towards simple values while it keeps failing.

    Each coordinate is first tried at its anchors (zero, the box's lower
    end, the neighbouring integers); if none keeps the violation it is
    bisected towards the nearest anchor.  Parameters that the event
    determines from the state are recomputed rather than shrunk.  The result
    is re-checked before it is returned.
    """
    witness = po.event.witness
    point = {"s": dict(cex[0]), "p": dict(cex[1])}
    if witness is not None:
        point["p"] = witness(point["s"])
    if not po.violated_by(point["s"], point["p"]):
        raise ContractError(f"{po.id}: shrink needs a violating point")

    def attempt(where, key, value) -> bool:
        trial = {"s": point["s"], "p": point["p"]}
        trial[where] = dict(trial[where])
        trial[where][key] = value
        if witness is not None:
            trial["p"] = witness(trial["s"])
        try:
            ok = po.violated_by(trial["s"], trial["p"])
        except (ArithmeticError, KeyError):
            ok = False
        if ok:
            point.update(trial)
        return ok

    lows = {}
    if space is not None:
        sp = space.resolved(po.machine.consts)
        lows = {"x": sp.x_lo, "v": sp.v_lo}
    coords = [("s", k) for k in _numeric_keys(point["s"])]
    if witness is None:
        coords += [("p", k) for k in sorted(point["p"])]
    for _ in range(2):
        for where, key in coords:
            cur = point[where][key]
            base = mpq(int(cur))
            anchors = sorted({mpq(0), lows.get(key, mpq(0)), base, base + 1, base - 1},
                             key=lambda a: (abs(a - cur), a))
            if any(a == cur or attempt(where, key, a) for a in anchors[:3]):
                continue
            good, bad = cur, anchors[0]
            for _ in range(_BISECT_STEPS):
                mid = _simplify((good + bad) / 2, good, bad)
                if attempt(where, key, mid):
                    good = mid
                else:
                    bad = mid
                if abs(good - bad) < mpq(1, 1 << 20):
                    break
    for where, key in coords:
        cur = point[where][key]
        for den in _DENOMINATORS:
            if cur * den == int(cur * den):
                break
            lo = mpq(int(cur * den) - (cur * den < 0), den)
            if attempt(where, key, lo) or attempt(where, key, lo + mpq(1, den)):
                break
    # finally move one coordinate onto a guard boundary if the violation survives there
    anchors = _boundary_anchors(point["s"], point["p"], po.machine.consts)
    snapped = False
    for where, key in coords:
        for value in anchors.get(key, ()):
            if value != point[where][key] and attempt(where, key, value):
                snapped = True
                break
        if snapped:
            break
    s, p = point["s"], point["p"]
    if not po.violated_by(s, p):
        raise ContractError(f"{po.id}: shrinking lost the violation")  # pragma: no cover
    return s, p


def _boundary_anchors(s, p, c) -> Dict[str, list]:
    """Values at which some guard or invariant of the two families is tight."""
    x, v = s.get("x"), s.get("v")
    out: Dict[str, list] = {}
    if x is None or v is None:
        return out
    dt = c.dt
    out["p_x"] = [x, x + v * dt + c.a_max * dt * dt / 2]
    out["p_v"] = [v + c.a_max * dt, v - c.b_max * dt, c.v_max, mpq(0)]
    out["x"] = [c.x_tgt - v * v / (2 * c.b_min)]
    out["v"] = [c.v_max, mpq(0)]
    if s.get("ctrl") == "BC":
        out["v_bc0"] = [v, c.v_max]
        out["p_v"].append(s["v_bc0"])
        out["v"].append(s["v_bc0"])
    if "x2" in s:
        v2 = s["v2"]
        out["x2"] = [x + (v * v / c.b_min - v2 * v2 / c.b_max) / 2]
        out["v2"] = [v, c.v_max, c.v_min]
        out["v"].append(v2)
        out["t_lce"] = [c.t_lc, mpq(0)]
    return out


def _simplify(mid, good, bad):
    """Prefer a short rational strictly between ``bad`` and ``good`` near ``mid``."""
    lo, hi = (bad, good) if bad < good else (good, bad)
    for den in (1, 2, 4, 8, 16, 32, 64):
        q = mpq(round(mid * den), den)
        if lo < q < hi:
            return q
    return mid


# -- batch front end -----------------------------------------------------------

def check_machines(names: Iterable[str], budget: int, seed=0,
                   consts: Optional[ScenarioConstants] = None, mutations=(),
                   space: Optional[SampleSpace] = None,
                   include_inherited: bool = False) -> List[Verdict]:
    consts = (consts or ScenarioConstants()).with_arith(EXACT)
    verdicts = []
    for name in names:
        m = build_machine(name, consts, mutations)
        verdicts.extend(check_pos(generate_pos(m, include_inherited), budget, seed, space))
    return verdicts


def write_jsonl(verdicts: Iterable[Verdict], fh) -> None:
    for v in verdicts:
        fh.write(json.dumps(v.to_json(), sort_keys=True) + "\n")


def summary_table(verdicts: Sequence[Verdict]) -> str:
    """Fixed-width text table, one row per obligation, plus totals."""
    rows = [("machine", "event", "kind", "target", "status", "samples", "hits")]
    for v in verdicts:
        rows.append((v.machine, v.event, "INV" if v.kind == POKind.INV else "GS", v.target,
                     str(v.status), str(v.samples), str(v.hits)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    counts = {st: sum(1 for v in verdicts if v.status == st) for st in Status}
    lines.append(f"total {len(verdicts)}: " + ", ".join(f"{st} {counts[st]}" for st in Status))
    return "\n".join(lines)


def exit_status(verdicts: Sequence[Verdict], vacuous_fails: bool = True) -> int:
    """0 when every obligation passed; 1 otherwise."""
    for v in verdicts:
        if v.status == Status.FAIL or (v.status == Status.VACUOUS and vacuous_fails):
            return 1
    return 0
