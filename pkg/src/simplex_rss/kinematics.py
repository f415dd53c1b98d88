"""Closed-form longitudinal kinematics over discrete control cycles.

All quantities are plain numbers.  In exact mode they are ``gmpy2.mpq``
rationals, in float mode Python floats; the two kinds are never mixed in one
computation (``mpq + float`` silently produces an ``mpfr``).  The comparison
helpers ``le``/``lt``/``eq`` are exact on rationals and apply a relative
tolerance of ``EPS`` as soon as a float is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import NamedTuple, Union

from gmpy2 import mpq

from .errors import ConfigError, DomainError

Number = Union[int, float, Fraction, "mpq"]

EXACT = "exact"
FLOAT = "float"
ARITH_MODES = (EXACT, FLOAT)

#: relative tolerance used by the comparison helpers in float mode
EPS = 1e-9


def exact(value) -> mpq:
    """Convert ``value`` (int, str, Fraction, float, mpq) to an exact rational."""
    if isinstance(value, str):
        try:
            return mpq(value.strip())
        except ValueError as exc:
            raise DomainError(f"not a rational number: {value!r}") from exc
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


def scalar(value, arith: str = EXACT):
    """Convert ``value`` to the number type of arithmetic mode ``arith``."""
    if arith == FLOAT:
        if isinstance(value, float):
            return value
        return float(exact(value))
    if arith == EXACT:
        return exact(value)
    raise ConfigError(f"unknown arithmetic mode {arith!r}", field="arith")


def _tol(a, b):
    return EPS * max(1.0, abs(a), abs(b))


def le(a, b) -> bool:
    if a.__class__ is float or b.__class__ is float:
        return a <= b + _tol(a, b)
    return a <= b


def ge(a, b) -> bool:
    return le(b, a)


def lt(a, b) -> bool:
    # in float mode a strict comparison is relaxed by the same tolerance
    if a.__class__ is float or b.__class__ is float:
        return a < b + _tol(a, b)
    return a < b


def gt(a, b) -> bool:
    return lt(b, a)


def eq(a, b) -> bool:
    if a.__class__ is float or b.__class__ is float:
        return abs(a - b) <= _tol(a, b)
    return a == b


def _coerce(*values):
    """Make a tuple of numbers arithmetic-safe: all floats or all rationals."""
    if any(v.__class__ is float for v in values):
        return tuple(float(v) for v in values)
    return tuple(v if v.__class__ is mpq else exact(v) for v in values)


@dataclass(frozen=True)
class ScenarioConstants:
    """Physical and legal constants of the pull-over scenario.

    Numeric fields are converted to the number type of ``arith`` on
    construction.  ``t_lc`` counts cycles; everything else is SI-like.
    """

    x_tgt: Number = 100
    v_min: Number = 5
    v_max: Number = 20
    b_min: Number = 2
    b_max: Number = 4
    a_max: Number = 1
    t_lc: Number = 4
    dt: Number = 1
    arith: str = EXACT

    def __post_init__(self):
        if self.arith not in ARITH_MODES:
            raise ConfigError(f"unknown arithmetic mode {self.arith!r}", field="arith")
        for f in fields(self):
            if f.name == "arith":
                continue
            try:
                object.__setattr__(self, f.name, scalar(getattr(self, f.name), self.arith))
            except (DomainError, TypeError, ValueError) as exc:
                raise ConfigError(f"{f.name}: {exc}", field=f.name) from exc
        checks = (
            ("b_min", self.b_min > 0, "b_min must be > 0"),
            ("b_max", self.b_min <= self.b_max, "b_max must be >= b_min"),
            ("a_max", self.a_max > 0, "a_max must be > 0"),
            ("v_min", self.v_min >= 0, "v_min must be >= 0"),
            ("v_max", self.v_min <= self.v_max, "v_max must be >= v_min"),
            ("x_tgt", self.x_tgt > 0, "x_tgt must be > 0"),
            ("t_lc", self.t_lc >= 1, "t_lc must be >= 1"),
            ("dt", self.dt > 0, "dt must be > 0"),
        )
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(message, field=name)

    def num(self, value):
        """Convert ``value`` to this scenario's number type."""
        return scalar(value, self.arith)

    def with_arith(self, arith: str) -> "ScenarioConstants":
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "arith"}
        if arith == EXACT and self.arith == FLOAT:
            values = {k: exact(v) for k, v in values.items()}
        return ScenarioConstants(**values, arith=arith)

    def replace(self, **changes) -> "ScenarioConstants":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class VehicleKinematics:
    """Longitudinal state of the subject vehicle.

    ``a_cmd`` is the mean acceleration applied during the cycle that produced
    this state (zero for an initial state).
    """

    x: Number
    v: Number
    a_cmd: Number = 0


class Step(NamedTuple):
    x: Number
    v: Number


def step_const_accel(x, v, a, dt) -> Step:
    """Advance ``dt`` time units under constant acceleration ``a``.

    No clamping is applied: a negative ``a`` held long enough drives the
    velocity below zero.
    """
    if dt < 0:
        raise DomainError("dt must be >= 0")
    x, v, a, dt = _coerce(x, v, a, dt)
    return Step(x + v * dt + a * dt * dt / 2, v + a * dt)


def extrapolate_max_accel(x, v, consts: ScenarioConstants, k: int) -> Step:
    """Position and velocity after ``k`` cycles at ``a_max`` (no ``v_max`` cap).

    The decision module only ever looks one or two cycles ahead.
    """
    if k < 0:
        raise DomainError("cycle count k must be >= 0")
    x, v = _coerce(x, v)
    horizon = k * consts.dt
    return Step(x + v * horizon + consts.a_max * horizon * horizon / 2,
                v + consts.a_max * horizon)


def physical_bounds(x, v, consts: ScenarioConstants):
    """Box of next-cycle (x, v) values reachable under the physical limits.

    Returns ``(x_lo, x_hi, v_lo, v_hi)``.
    """
    dt = consts.dt
    return (x, x + v * dt + consts.a_max * dt * dt / 2,
            v - consts.b_max * dt, v + consts.a_max * dt)


def admissible_next(cur: VehicleKinematics, p_x, p_v, consts: ScenarioConstants) -> bool:
    """True iff ``(p_x, p_v)`` respects the one-cycle physical constraints."""
    x_lo, x_hi, v_lo, v_hi = physical_bounds(*_coerce(cur.x, cur.v), consts)
    return le(x_lo, p_x) and le(p_x, x_hi) and le(v_lo, p_v) and le(p_v, v_hi)


def brake_for(x, v, b, duration) -> Step:
    """Brake at deceleration ``b`` for ``duration``; the vehicle holds once stopped."""
    if v <= 0:
        return Step(x, v)
    stop_time = v / b
    if duration >= stop_time:
        return Step(x + v * stop_time / 2, v * 0)
    return Step(x + v * duration - b * duration * duration / 2, v - b * duration)


def accelerate_for(x, v, a, v_cap, duration) -> Step:
    """Accelerate at ``a`` for ``duration`` but never beyond ``v_cap``."""
    if v >= v_cap:
        return Step(x + v * duration, v)
    rising = min(duration, (v_cap - v) / a)
    x1 = x + v * rising + a * rising * rising / 2
    v1 = v + a * rising
    return Step(x1 + v1 * (duration - rising), v1)


class PlanCycle(NamedTuple):
    x: Number
    v: Number
    t_accel: Number
    t_cruise: Number
    t_brake: Number


def plan_cycle(x, v, t_accel, t_cruise, t_brake, consts: ScenarioConstants) -> PlanCycle:
    """Run one cycle of an accelerate -> cruise -> brake plan.

    Phases that end inside the cycle hand the remaining time to the next
    phase, so a single cycle may mix manoeuvres.  Acceleration uses ``a_max``
    capped at ``v_max``; braking uses ``b_min`` and holds at standstill.  Each
    phase timer drops by the time it consumed.
    """
    rest = consts.dt
    if t_accel > 0:
        used = min(t_accel, rest)
        x, v = accelerate_for(x, v, consts.a_max, consts.v_max, used)
        t_accel, rest = t_accel - used, rest - used
    if rest > 0 and t_cruise > 0:
        used = min(t_cruise, rest)
        x = x + v * used
        t_cruise, rest = t_cruise - used, rest - used
    if rest > 0 and t_brake > 0:
        used = min(t_brake, rest)
        x, v = brake_for(x, v, consts.b_min, used)
        t_brake = t_brake - used
    return PlanCycle(x, v, t_accel, t_cruise, t_brake)
