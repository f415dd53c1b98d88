"""Acceptance gate: one PASS/FAIL line per criterion.

Run with pytest or directly as ``python3 tests/test_acceptance.py``.  Heavy
runs are cached per process, so the determinism criterion repeats criteria
1 to 3 once more from scratch and compares report digests.
"""

import hashlib
import io
import json
import random
import sys
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List

import pytest
from gmpy2 import mpq

from simplex_rss import (SPEC_S3, SPEC_S4, ScenarioConstants, Status, build_machine,
                         check_machines, phi4)
from simplex_rss.controller import MaxAccel, RandomAdmissible
from simplex_rss.harness import TraceStatus, make_initial_state, run_trace, trace_to_string
from simplex_rss.machines import MACHINE_NAMES, to_valuation
from simplex_rss.machines.sampling import CandidateSampler
from simplex_rss.po import check_pos, generate_pos, write_jsonl
from simplex_rss.rss import d_rss, env_holds, gap_clause_drss, gap_clause_machine
from simplex_rss.state import Ctrl

import oracles

SEED = 7
BUDGET = 10 ** 5
N_TRACES = 10_000
MAX_CYCLES = 500
MUTATION = "dm-one-cycle-lookahead"
EQUIV_SAMPLES = 10 ** 5
STRENGTHEN_SAMPLES = 10 ** 5

C = ScenarioConstants()


def _line(n: int, ok: bool, title: str, detail: str) -> str:
    return f"criterion {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- criterion 1: PO suite -------------------------------------------------------

@dataclass
class PoRun:
    verdicts: list
    seconds: float
    report: str


def run_po_suite() -> PoRun:
    t0 = time.perf_counter()
    verdicts = check_machines(MACHINE_NAMES, BUDGET, SEED, C)
    buf = io.StringIO()
    write_jsonl(verdicts, buf)
    return PoRun(verdicts, time.perf_counter() - t0, buf.getvalue())


@lru_cache(maxsize=None)
def po_suite() -> PoRun:
    return run_po_suite()


def criterion_1():
    r = po_suite()
    counts = {st: sum(1 for v in r.verdicts if v.status == st) for st in Status}
    ok = (counts[Status.PASS] == len(r.verdicts) == 149 and r.seconds < 300)
    detail = (f"{len(r.verdicts)} POs, " + ", ".join(f"{k} {n}" for k, n in counts.items())
              + f", {r.seconds:.0f}s (limit 300s)")
    return ok, detail


# -- criterion 2: mutation sensitivity --------------------------------------------

@dataclass
class MutationRun:
    failing: Dict[str, List]
    report: str
    reproducible: bool


def run_mutation() -> MutationRun:
    failing = {}
    buf = io.StringIO()
    reproducible = True
    for family, names in (("S4", ["M41"]), ("S3", ["M31"])):
        verdicts = check_machines(names, BUDGET, SEED, C, mutations=(MUTATION,))
        write_jsonl(verdicts, buf)
        bad = [v for v in verdicts if v.status == Status.FAIL]
        failing[family] = bad
        for v in bad:
            # the shrunk point still violates a freshly built obligation, and
            # checking that obligation alone reproduces it
            m = build_machine(v.machine, C, (MUTATION,))
            po = next(p for p in generate_pos(m) if p.id == v.po_id)
            s, p = v.counterexample
            alone = check_pos([po], BUDGET, SEED)[0]
            if not po.violated_by(s, p) or alone.counterexample != v.counterexample:
                reproducible = False
    return MutationRun(failing, buf.getvalue(), reproducible)


@lru_cache(maxsize=None)
def mutation() -> MutationRun:
    return run_mutation()


def criterion_2():
    r = mutation()
    ok = all(r.failing[f] for f in ("S4", "S3")) and r.reproducible
    parts = []
    for fam in ("S4", "S3"):
        bad = r.failing[fam]
        first = bad[0].po_id if bad else "none"
        samples = max((v.samples for v in bad), default=0)
        parts.append(f"{fam} {len(bad)} FAIL (first {first}, <= {samples} samples)")
    parts.append("counterexamples re-verified and reproduced alone" if r.reproducible
                 else "counterexample not reproducible")
    return ok, "; ".join(parts)


# -- criterion 3: adversarial traces ----------------------------------------------

def _rat(rng, lo, hi):
    den = rng.choice((1, 2, 4, 8, 64, 1000))
    return mpq(rng.randint(int(lo * den), int(hi * den)), den)


def s4_initial_states(seed=SEED, n=N_TRACES):
    rng = random.Random(f"{seed}/acceptance/S4")
    out = []
    while len(out) < n:
        v = _rat(rng, 0, C.v_max)
        if rng.random() < 0.2:
            # on the braking boundary
            x = C.x_tgt - v * v / (2 * C.b_min)
        else:
            x = _rat(rng, 0, C.x_tgt)
        if x >= 0 and phi4(x, v, C):
            out.append((x, v))
    return out


def s3_initial_states(seed=SEED, n=N_TRACES):
    rng = random.Random(f"{seed}/acceptance/S3")
    out = []
    while len(out) < n:
        v2 = _rat(rng, C.v_min, C.v_max)
        v = v2 if rng.random() < 0.2 else _rat(rng, 0, v2)
        x = _rat(rng, 0, 150)
        if rng.random() < 0.3:
            x2 = x + max(d_rss(v2, v, C), mpq(1, 64))
        else:
            x2 = x + _rat(rng, 0, 150)
        init = make_initial_state(SPEC_S3, C, x, v, x2, v2)
        if SPEC_S3.precondition_holds(init, C) and env_holds(init.povs, C):
            out.append((x, v, x2, v2))
    return out


def _strategy(i):
    return MaxAccel() if i % 2 == 0 else RandomAdmissible()


@dataclass
class TraceRun:
    s4: list = field(default_factory=list)
    s3: list = field(default_factory=list)
    seconds: float = 0.0
    report: str = ""


def run_traces() -> TraceRun:
    t0 = time.perf_counter()
    r = TraceRun()
    lines = []
    for i, (x, v) in enumerate(s4_initial_states()):
        tr = run_trace(SPEC_S4, make_initial_state(SPEC_S4, C, x, v), _strategy(i),
                       MAX_CYCLES, C, seed=i)
        r.s4.append(tr)
        lines.append(f"S4 {i} {tr.status} {tr.cycles} {_digest(trace_to_string(tr))}")
    for i, (x, v, x2, v2) in enumerate(s3_initial_states()):
        tr = run_trace(SPEC_S3, make_initial_state(SPEC_S3, C, x, v, x2, v2), _strategy(i),
                       MAX_CYCLES, C, seed=i)
        r.s3.append(tr)
        lines.append(f"S3 {i} {tr.status} {tr.cycles} {_digest(trace_to_string(tr))}")
    r.seconds = time.perf_counter() - t0
    r.report = "\n".join(lines) + "\n"
    return r


@lru_cache(maxsize=None)
def traces() -> TraceRun:
    return run_traces()


def _status_counts(trs):
    out = {}
    for tr in trs:
        out[str(tr.status)] = out.get(str(tr.status), 0) + 1
    return out


def criterion_3():
    r = traces()
    bad = [tr for tr in r.s4 + r.s3 if tr.violations or tr.status == TraceStatus.VIOLATION]
    ok = (not bad and len(r.s4) == len(r.s3) == N_TRACES and r.seconds < 600)
    detail = (f"S4 {_status_counts(r.s4)}, S3 {_status_counts(r.s3)}, "
              f"{len(bad)} traces with violations, {r.seconds:.0f}s (limit 600s)")
    if bad:
        first = bad[0].violations[0]
        detail += f"; first: {bad[0].scenario} cycle {first.cycle} {first}"
    return ok, detail


# -- criterion 4: exact goal ------------------------------------------------------

def _miss_kind(tr) -> str:
    if tr.final.v_bc0 == 0:
        return "handed over at rest"
    if tr.status == TraceStatus.TIMEOUT:
        return "BC schedule unfinished at the cycle cap"
    return "other"


def _tally(kinds):
    out = {}
    for k in kinds:
        out[k] = out.get(k, 0) + 1
    return ", ".join(f"{n} {k}" for k, n in sorted(out.items())) or "none"


def criterion_4():
    r = traces()
    ended_bc = [tr for tr in r.s4 if tr.final.ctrl == Ctrl.BC]
    exact_bad = [tr for tr in ended_bc if (tr.final.sv.x, tr.final.sv.v) != (C.x_tgt, 0)]
    moving = [tr for tr in ended_bc if tr.final.v_bc0 > 0]
    fc = ScenarioConstants(arith="float")
    tol = 1e-9 * float(fc.x_tgt)
    worst, float_bc, float_bad = 0.0, 0, []
    for i, (x, v) in enumerate(s4_initial_states()):
        tr = run_trace(SPEC_S4, make_initial_state(SPEC_S4, fc, float(x), float(v)),
                       _strategy(i), MAX_CYCLES, fc, seed=i)
        if tr.final.ctrl != Ctrl.BC:
            continue
        float_bc += 1
        err = abs(tr.final.sv.x - float(fc.x_tgt))
        if err > tol:
            float_bad.append(tr)
        elif tr.final.v_bc0 > 0:
            worst = max(worst, err)
    ok = bool(ended_bc) and not exact_bad and float_bc > 0 and not float_bad
    return ok, (f"exact: {len(ended_bc)} BC-ended traces, {len(exact_bad)} off (100, 0) "
                f"[{_tally(map(_miss_kind, exact_bad))}], every one of the {len(moving)} "
                f"handovers at p_v > 0 exact: "
                f"{all((t.final.sv.x, t.final.sv.v) == (C.x_tgt, 0) for t in moving)}; "
                f"float: {float_bc} BC-ended, {len(float_bad)} beyond {tol:.0e} "
                f"[{_tally(map(_miss_kind, float_bad))}], max error otherwise {worst:.3g}")


# -- criterion 5: manoeuvre identities --------------------------------------------

def criterion_5():
    r = traces()
    m42 = build_machine("M42", C)
    labels = ("v_in_BC", "cruise_before_brake", "x_in_BC")
    invs = [i for i in m42.all_invariants if i.label in labels]
    checked, broken = 0, []
    for tr in r.s4:
        for rec in tr.records:
            if rec.state.ctrl != Ctrl.BC:
                continue
            checked += 1
            s = to_valuation(m42, rec.state)
            broken += [(tr.seed, rec.cycle, i.label) for i in invs if not i(s)]
    pairs, shrinking = 0, []
    for tr in r.s3:
        for prev, cur in zip(tr.records, tr.records[1:]):
            if prev.state.ctrl != Ctrl.BC or cur.state.ctrl != Ctrl.BC:
                continue
            p2 = prev.state.pov(2)
            if prev.state.sv.v > p2.v:
                continue
            pairs += 1
            if cur.state.pov(2).x - cur.state.sv.x < p2.x - prev.state.sv.x:
                shrinking.append((tr.seed, cur.cycle))
    ok = checked > 0 and pairs > 0 and not broken and not shrinking
    return ok, (f"{checked} S4 BC cycles x {len(invs)} identities, {len(broken)} broken; "
                f"{pairs} S3 BC cycle pairs with v <= v2, {len(shrinking)} with a shrinking gap")


# -- criterion 6: gap-form equivalence --------------------------------------------

def criterion_6():
    rng = random.Random(f"{SEED}/acceptance/gap")
    n, disagree, on_boundary = 0, 0, 0
    while n < EQUIV_SAMPLES:
        v, v2 = _rat(rng, 0, C.v_max), _rat(rng, 0, C.v_max)
        x = _rat(rng, 0, 200)
        need = d_rss(v2, v, C)
        u = rng.random()
        if u < 0.3 and need > 0:
            x2 = x + need
            on_boundary += 1
        elif u < 0.5 and need > 0:
            x2 = x + need + rng.choice((-1, 1)) * mpq(1, 2 ** rng.randint(1, 40))
        else:
            x2 = x + _rat(rng, 0, 200)
        if not x < x2:
            continue
        n += 1
        a = gap_clause_drss(x, v, x2, v2, C)
        b = gap_clause_machine(x, v, x2, v2, C)
        F = oracles.F
        ref = F(x2) - F(x) >= oracles.d_rss(F(v2), F(v), F(C.b_min), F(C.b_max))
        disagree += not (a == b == ref)
    return disagree == 0, (f"{n} rational states with x < x2 ({on_boundary} on the boundary), "
                           f"{disagree} disagreements")


# -- criterion 7: guard strengthening ---------------------------------------------

def criterion_7():
    m41, m42 = build_machine("M41", C), build_machine("M42", C)
    concrete = m42.event("BC_cruise->AC")
    kept = {a.label for a in concrete.guard}
    removed = [a for a in m41.event("BC->AC").guard if a.label not in kept]
    sampler = CandidateSampler(m42, concrete, seed=SEED)
    n, drawn, failures = 0, 0, {}
    while n < STRENGTHEN_SAMPLES and drawn < 50 * STRENGTHEN_SAMPLES:
        drawn += 1
        s, p = sampler.draw()
        if m42.violated_invariants(s) or not concrete.holds(s, p):
            continue
        n += 1
        for a in removed:
            if not a(s, p):
                failures[a.label] = failures.get(a.label, 0) + 1
    ok = n >= STRENGTHEN_SAMPLES and not failures and bool(removed)
    return ok, (f"{n} invariant states meeting the BC_cruise->AC guard ({drawn} drawn); "
                f"removed atoms {', '.join(a.label for a in removed)}; failures {failures or 0}")


# -- criterion 8: determinism -----------------------------------------------------

def criterion_8():
    first = (po_suite().report, mutation().report, traces().report)
    again = (run_po_suite().report, run_mutation().report, run_traces().report)
    names = ("PO suite", "mutation", "traces")
    same = [a == b for a, b in zip(first, again)]
    detail = ", ".join(f"{n} {_digest(a)}{'' if ok else ' != ' + _digest(b)}"
                       for n, a, b, ok in zip(names, first, again, same))
    return all(same), "repeat run byte-identical: " + detail


CRITERIA = [
    (1, "PO suite at 1e5 samples per PO", criterion_1),
    (2, "mutation sensitivity", criterion_2),
    (3, "safety under adversarial AC", criterion_3),
    (4, "exact goal achievement", criterion_4),
    (5, "manoeuvre identities", criterion_5),
    (6, "gap-form equivalence", criterion_6),
    (7, "guard strengthening", criterion_7),
    (8, "determinism", criterion_8),
]


@pytest.mark.parametrize("n,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_acceptance(n, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(n, ok, title, detail))
    assert ok, detail


def main() -> int:
    failed = 0
    for n, title, fn in CRITERIA:
        ok, detail = fn()
        print(_line(n, ok, title, detail), flush=True)
        failed += not ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
