"""Run configuration: an INI file with one section per module, plus overrides.

Precedence is defaults < file < environment < command-line flags.  An
environment variable ``SIMPLEX_RSS_<SECTION>_<KEY>`` (upper case) overrides
``key`` of ``[section]``; e.g. ``SIMPLEX_RSS_SCENARIO_SEED=7``.

Numbers are kept as the text the user wrote (``0.5`` and ``1/2`` are both
fine) and converted to the scenario's number type only when a run is built,
so exact mode never sees a binary float.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Mapping, Optional, Tuple

from .controller import FAILURE_POLICIES, AcStrategy, make_strategy
from .errors import ConfigError, ContractError, DomainError, FeatureError
from .harness import Lattice, frange, make_initial_state
from .kinematics import ARITH_MODES, ScenarioConstants, scalar
from .machines import MACHINE_NAMES, MUTATIONS
from .scenarios import SubscenarioSpec, get_spec
from .state import WorldState

ENV_PREFIX = "SIMPLEX_RSS_"
FORMATS = ("json", "csv")
VACUOUS_MODES = ("fail", "warn")


@dataclass(frozen=True)
class ScenarioSection:
    id: str = "S4"
    seed: int = 0
    max_cycles: int = 500
    arith: str = "exact"
    policy: str = "substitute"
    collision_margin: str = "0"


@dataclass(frozen=True)
class ConstantsSection:
    x_tgt: str = "100"
    v_min: str = "5"
    v_max: str = "20"
    b_min: str = "2"
    b_max: str = "4"
    a_max: str = "1"
    t_lc: str = "4"
    dt: str = "1"


@dataclass(frozen=True)
class InitSection:
    x: str = "0"
    v: str = "0"
    x2: str = ""
    v2: str = ""
    t_lce: str = "0"


@dataclass(frozen=True)
class AcSection:
    strategy: str = "max-accel"
    script: str = ""
    denominator: int = 64


@dataclass(frozen=True)
class OutputSection:
    path: str = ""
    format: str = "json"


@dataclass(frozen=True)
class SweepSection:
    x: str = "0:100:10"
    v: str = "0:20:2"
    gap: str = ""
    v2: str = ""


@dataclass(frozen=True)
class CheckSection:
    machines: str = ",".join(MACHINE_NAMES)
    budget: int = 100000
    mutate: str = ""
    vacuous: str = "fail"


_SECTIONS = (
    ("scenario", ScenarioSection), ("constants", ConstantsSection), ("init", InitSection),
    ("ac", AcSection), ("output", OutputSection), ("sweep", SweepSection),
    ("check", CheckSection),
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a ``simulate``, ``check`` or ``sweep`` run needs."""

    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    constants: ConstantsSection = field(default_factory=ConstantsSection)
    init: InitSection = field(default_factory=InitSection)
    ac: AcSection = field(default_factory=AcSection)
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    check: CheckSection = field(default_factory=CheckSection)

    # -- building run objects ----------------------------------------------------

    def consts(self) -> ScenarioConstants:
        values = {f.name: getattr(self.constants, f.name) for f in fields(ConstantsSection)}
        try:
            return ScenarioConstants(**values, arith=self.scenario.arith)
        except ConfigError as exc:
            raise ConfigError(f"constants.{exc.field}: {exc}", field=exc.field) from exc

    def spec(self) -> SubscenarioSpec:
        try:
            return get_spec(self.scenario.id)
        except FeatureError as exc:
            raise ConfigError(str(exc), field="id") from exc

    def number(self, section: str, key: str, consts: Optional[ScenarioConstants] = None):
        text = getattr(getattr(self, section), key)
        try:
            return scalar(text, (consts or self.consts()).arith)
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}: not a number: {text!r}", field=key) from exc

    def initial_state(self, consts: Optional[ScenarioConstants] = None) -> WorldState:
        consts = consts or self.consts()
        spec = self.spec()
        x, v = self.number("init", "x", consts), self.number("init", "v", consts)
        x2 = v2 = None
        if spec.time_limited:
            for key in ("x2", "v2"):
                if not getattr(self.init, key).strip():
                    raise ConfigError(f"init.{key} is required for {spec.id}", field=key)
            x2, v2 = self.number("init", "x2", consts), self.number("init", "v2", consts)
        return make_initial_state(spec, consts, x, v, x2, v2,
                                  t_lce=self.number("init", "t_lce", consts))

    def strategy(self) -> AcStrategy:
        name = self.ac.strategy
        if name == "scripted":
            if not self.ac.script:
                raise ConfigError("ac.script is required for the scripted strategy",
                                  field="script")
            return make_strategy(name, path=self.ac.script)
        if name == "random-admissible":
            return make_strategy(name, denominator=self.ac.denominator)
        return make_strategy(name)

    def collision_margin(self, consts: Optional[ScenarioConstants] = None):
        return self.number("scenario", "collision_margin", consts)

    def lattice(self, consts: Optional[ScenarioConstants] = None) -> Lattice:
        consts = consts or self.consts()
        axes = {}
        for key in ("x", "v", "gap", "v2"):
            text = getattr(self.sweep, key).strip()
            axes[key] = parse_axis(text, consts, key) if text else [None]
        if axes["x"] == [None] or axes["v"] == [None]:
            raise ConfigError("sweep.x and sweep.v are required", field="x")
        return Lattice(axes["x"], axes["v"], axes["gap"], axes["v2"])

    def machine_list(self) -> List[str]:
        names = [n.strip().upper() for n in self.check.machines.split(",") if n.strip()]
        if not names:
            raise ConfigError("check.machines is empty", field="machines")
        return names

    def mutations(self) -> Tuple[str, ...]:
        return tuple(n.strip() for n in self.check.mutate.split(",") if n.strip())

    def validate(self) -> "RunConfig":
        """Check every field that does not need a run to be checked."""
        consts = self.consts()
        self.spec()
        s = self.scenario
        if s.arith not in ARITH_MODES:
            raise ConfigError(f"scenario.arith must be one of {ARITH_MODES}", field="arith")
        if s.policy not in FAILURE_POLICIES:
            raise ConfigError(f"scenario.policy must be one of {FAILURE_POLICIES}",
                              field="policy")
        if s.max_cycles < 1:
            raise ConfigError("scenario.max_cycles must be >= 1", field="max_cycles")
        self.collision_margin(consts)
        for key in ("x", "v", "t_lce"):
            self.number("init", key, consts)
        for key in ("x2", "v2"):
            if getattr(self.init, key).strip():
                self.number("init", key, consts)
        if self.output.format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}", field="format")
        if self.check.budget < 1:
            raise ConfigError("check.budget must be >= 1", field="budget")
        if self.check.vacuous not in VACUOUS_MODES:
            raise ConfigError(f"check.vacuous must be one of {VACUOUS_MODES}", field="vacuous")
        if self.ac.denominator < 1:
            raise ConfigError("ac.denominator must be >= 1", field="denominator")
        return self

    # -- overrides and serialisation -----------------------------------------------

    def override(self, section: str, key: str, value) -> "RunConfig":
        cls = dict(_SECTIONS).get(section)
        if cls is None:
            raise ConfigError(f"unknown section [{section}]", field=section)
        kinds = {f.name: f.type for f in fields(cls)}
        if key not in kinds:
            raise ConfigError(f"unknown key {key!r} in [{section}]", field=key)
        typed = _convert(section, key, kinds[key], value)
        new_section = replace(getattr(self, section), **{key: typed})
        return replace(self, **{section: new_section})

    def to_ini(self) -> str:
        """Canonical text: every section and key in schema order."""
        out = io.StringIO()
        for i, (name, _) in enumerate(_SECTIONS):
            if i:
                out.write("\n")
            out.write(f"[{name}]\n")
            sec = getattr(self, name)
            for f in fields(sec):
                value = getattr(sec, f.name)
                out.write(f"{f.name} = {value}\n" if value != "" else f"{f.name} =\n")
        return out.getvalue()


def _convert(section, key, kind, value):
    if kind in (int, "int"):
        try:
            return int(str(value).strip())
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}",
                              field=key) from None
    return str(value).strip()


def parse_axis(text: str, consts: ScenarioConstants, key: str = "axis") -> list:
    """``start:stop:step`` (inclusive) or a comma-separated list of values."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(text)
            return frange(*parts, consts)
        return [consts.num(t.strip()) for t in text.split(",") if t.strip()]
    except ContractError as exc:
        raise ConfigError(f"sweep.{key}: {exc}", field=key) from exc
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"sweep.{key}: bad axis {text!r}", field=key) from exc


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}", field="file") from exc
    cfg = RunConfig()
    known = dict(_SECTIONS)
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{source}: unknown section [{section}]", field=section)
        for key, value in parser.items(section):
            cfg = cfg.override(section, key, value)
    return cfg


def load_config(path: Optional[str] = None, environ: Optional[Mapping[str, str]] = None,
                overrides: Optional[Dict[Tuple[str, str], object]] = None) -> RunConfig:
    """Defaults, then ``path``, then environment variables, then ``overrides``."""
    if path:
        try:
            with open(path) as fh:
                cfg = parse_config(fh.read(), path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}", field="config") from exc
    else:
        cfg = RunConfig()
    cfg = apply_env(cfg, os.environ if environ is None else environ)
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            cfg = cfg.override(section, key, value)
    return cfg


def apply_env(cfg: RunConfig, environ: Mapping[str, str]) -> RunConfig:
    for section, cls in _SECTIONS:
        for f in fields(cls):
            name = f"{ENV_PREFIX}{section.upper()}_{f.name.upper()}"
            if name in environ:
                cfg = cfg.override(section, f.name, environ[name])
    return cfg


def env_help() -> str:
    lines = []
    for section, cls in _SECTIONS:
        keys = ", ".join(f.name.upper() for f in fields(cls))
        lines.append(f"  {ENV_PREFIX}{section.upper()}_<KEY>  KEY in {keys}")
    return "\n".join(lines)


def check_mutations(names) -> None:
    unknown = set(names) - set(MUTATIONS)
    if unknown:
        raise FeatureError(f"unknown mutation(s): {', '.join(sorted(unknown))}")
