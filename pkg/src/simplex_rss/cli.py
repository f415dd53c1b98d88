"""Command-line front end: ``simplex-rss {simulate,check,sweep,export-machines}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from typing import List, Optional

from .config import RunConfig, check_mutations, env_help, load_config
from .errors import ConfigError, ContractError, FeatureError, PreconditionError
from .harness import (TraceStatus, run_trace, sweep_initial_states, sweep_summary,
                      write_sweep_csv, write_trace_csv, write_trace_jsonl, _num)
from .kinematics import EXACT
from .machines import build_machine, write_inventory
from .po import Status, check_machines, exit_status, summary_table, write_jsonl

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_TIMEOUT = 4
EXIT_NOTHING_RAN = 5

EXIT_CODES = """exit codes:
  0  GOAL reached / every obligation PASS
  1  VIOLATION in a trace / some obligation FAIL (or VACUOUS with --vacuous fail)
  2  usage error (bad flag, unknown machine or mutation, empty lattice)
  3  configuration or precondition error
  4  TIMEOUT or STALLED trace
  5  nothing ran (every sweep point filtered out)"""

# flag dest -> (section, key)
_FLAG_KEYS = {
    "scenario": ("scenario", "id"), "seed": ("scenario", "seed"),
    "max_cycles": ("scenario", "max_cycles"), "arith": ("scenario", "arith"),
    "policy": ("scenario", "policy"), "strategy": ("ac", "strategy"),
    "x": ("init", "x"), "v": ("init", "v"), "x2": ("init", "x2"), "v2": ("init", "v2"),
    "out": ("output", "path"), "format": ("output", "format"),
    "machines": ("check", "machines"), "budget": ("check", "budget"),
    "mutate": ("check", "mutate"), "vacuous": ("check", "vacuous"),
}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", help="master seed; sub-runs derive their own")
    common.add_argument("--arith", choices=("exact", "float"))
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--max-cycles", dest="max_cycles", metavar="N")
    common.add_argument("--scenario", metavar="ID", help="subscenario id, S4 or S3")

    p = argparse.ArgumentParser(
        prog="simplex-rss",
        description="Simplex / goal-aware RSS pull-over simulator and proof-obligation checker.",
        epilog=EXIT_CODES + "\n\nenvironment overrides (flags win over them):\n" + env_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sim = sub.add_parser("simulate", parents=[common], help="run one trace")
    sim.add_argument("--strategy", help="AC strategy: max-accel, cruise, random-admissible, scripted")
    sim.add_argument("--policy", choices=("substitute", "clip"))
    for name in ("x", "v", "x2", "v2"):
        sim.add_argument(f"--{name}", metavar="NUM")

    chk = sub.add_parser("check", parents=[common], help="check proof obligations")
    chk.add_argument("--machines", metavar="LIST", help="comma-separated, e.g. M40,M41,M42")
    chk.add_argument("--budget", metavar="N", help="candidate samples per obligation")
    chk.add_argument("--mutate", metavar="NAME", help="seed a known defect into the machines")
    chk.add_argument("--vacuous", choices=("fail", "warn"),
                     help="treat VACUOUS verdicts as failures or warnings")

    sw = sub.add_parser("sweep", parents=[common], help="run a lattice of initial states")
    sw.add_argument("--strategy")
    sw.add_argument("--policy", choices=("substitute", "clip"))

    sub.add_parser("export-machines", parents=[common], help="write the machine inventory")
    return p


def _config(args) -> RunConfig:
    overrides = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides=overrides).validate()


@contextlib.contextmanager
def _sink(path: str):
    if not path or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _report(msg: str, to_stdout: bool) -> None:
    # keep stdout clean when it carries the data
    print(msg, file=sys.stdout if to_stdout else sys.stderr)


def cmd_simulate(cfg: RunConfig) -> int:
    consts = cfg.consts()
    spec = cfg.spec()
    init = cfg.initial_state(consts)
    tr = run_trace(spec, init, cfg.strategy(), cfg.scenario.max_cycles, consts,
                   seed=cfg.scenario.seed, policy=cfg.scenario.policy,
                   collision_margin=cfg.collision_margin(consts))
    with _sink(cfg.output.path) as fh:
        (write_trace_csv if cfg.output.format == "csv" else write_trace_jsonl)(tr, fh)
    fin = tr.final.sv
    msg = f"{spec.id} {tr.status} after {tr.cycles} cycles at x={_num(fin.x)} v={_num(fin.v)}"
    for v in tr.violations:
        msg += f"\n  cycle {v.cycle}: {v}"
    _report(msg, bool(cfg.output.path))
    if tr.status == TraceStatus.GOAL:
        return EXIT_OK
    if tr.status == TraceStatus.VIOLATION:
        return EXIT_FAIL
    return EXIT_TIMEOUT


def cmd_check(cfg: RunConfig) -> int:
    names = cfg.machine_list()
    mutations = cfg.mutations()
    try:
        for n in names:
            build_machine(n)
        check_mutations(mutations)
    except FeatureError as exc:
        raise UsageError(str(exc)) from exc
    consts = cfg.consts().with_arith(EXACT)
    verdicts = check_machines(names, cfg.check.budget, cfg.scenario.seed, consts, mutations)
    with _sink(cfg.output.path) as fh:
        if cfg.output.format == "csv":
            cols = ["po", "kind", "machine", "event", "target", "status", "samples", "hits",
                    "hit_ratio", "seed"]
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for v in verdicts:
                w.writerow(v.to_json())
        else:
            write_jsonl(verdicts, fh)
    lines = [summary_table(verdicts)]
    for v in verdicts:
        if v.status == Status.FAIL and v.counterexample is not None:
            s, p = v.counterexample
            lines.append(f"counterexample {v.po_id}: state={json.dumps(_plain(s))} "
                         f"params={json.dumps(_plain(p))}")
        elif v.status == Status.VACUOUS:
            lines.append(f"warning: {v.po_id} is VACUOUS")
    _report("\n".join(lines), bool(cfg.output.path))
    return EXIT_OK if exit_status(verdicts, cfg.check.vacuous == "fail") == 0 else EXIT_FAIL


def _plain(d):
    return {k: str(v) for k, v in sorted(d.items())}


def cmd_sweep(cfg: RunConfig) -> int:
    consts = cfg.consts()
    grid = cfg.lattice(consts)
    if len(grid) == 0:
        raise UsageError("empty lattice")
    report = sweep_initial_states(cfg.spec(), grid, cfg.strategy(), consts,
                                  seed=cfg.scenario.seed, max_cycles=cfg.scenario.max_cycles,
                                  policy=cfg.scenario.policy)
    with _sink(cfg.output.path) as fh:
        if cfg.output.format == "csv":
            write_sweep_csv(report, fh)
        else:
            for p in report.points:
                fh.write(json.dumps({"x": _num(p.x), "v": _num(p.v), "gap": _num(p.gap),
                                     "v2": _num(p.v2), "status": p.status, "cycles": p.cycles,
                                     "final_x": _num(p.final_x), "final_v": _num(p.final_v)},
                                    sort_keys=True) + "\n")
    _report(sweep_summary(report), bool(cfg.output.path))
    if report.ran == 0:
        return EXIT_NOTHING_RAN
    counts = report.counts()
    if counts["VIOLATION"]:
        return EXIT_FAIL
    if counts["TIMEOUT"] or counts["STALLED"]:
        return EXIT_TIMEOUT
    return EXIT_OK


def cmd_export_machines(cfg: RunConfig) -> int:
    consts = cfg.consts()
    machines = [build_machine(n, consts) for n in cfg.machine_list()]
    with _sink(cfg.output.path) as fh:
        n = write_inventory(machines, fh)
    if cfg.output.path:
        _report(f"wrote {n} machines to {cfg.output.path}", True)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "check": cmd_check, "sweep": cmd_sweep,
    "export-machines": cmd_export_machines,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"simplex-rss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"simplex-rss: config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, ContractError) as exc:
        label = getattr(exc, "label", None) or getattr(exc, "clause", None)
        print(f"simplex-rss: precondition error [{label}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
