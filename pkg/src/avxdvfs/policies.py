"""DVFS upclock policies.

Policies are immutable. The engine owns all per-run state (current level,
pending timer) and asks the policy for a decision at each event.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError, ContractViolation
from .model import (
    BreakEvenEntry,
    FrequencyTable,
    LicenseLevel,
    TransitionCostTable,
    break_even_lookup,
    break_even_table,
    dilate,
)

INTEL_MEASURED_TIMEOUT_US = 670.0
INTEL_DOCUMENTED_TIMEOUT_US = 2000.0


class EventKind(enum.Enum):
    REGION_END = "region_end"
    SEGMENT_START = "segment_start"
    TIMER_FIRED = "timer_fired"
    HINT = "hint"


@dataclass(frozen=True)
class PolicyEvent:
    kind: EventKind
    level: LicenseLevel  # level in force when the event is delivered
    required: LicenseLevel  # required level of the current segment
    cores: int
    f_ref_ghz: float
    clairvoyant_gap_ref_us: float | None = None


class ActionKind(enum.Enum):
    HOLD = "hold"
    ARM_TIMER = "arm_timer"
    UPCLOCK_NOW = "upclock_now"


@dataclass(frozen=True)
class PolicyAction:
    kind: ActionKind
    delay_us: float = 0.0
    # None means "the current segment's required level"; anything lower is a contract violation.
    target: LicenseLevel | None = None

    def __post_init__(self):
        if self.delay_us < 0:
            raise ValueError("timer delay must be non-negative")


HOLD = PolicyAction(ActionKind.HOLD)
UPCLOCK = PolicyAction(ActionKind.UPCLOCK_NOW)


def arm(delay_us: float) -> PolicyAction:
    return PolicyAction(ActionKind.ARM_TIMER, delay_us)


class Policy:
    name = "policy"
    clairvoyant = False

    def decide(self, event: PolicyEvent) -> PolicyAction:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class FixedTimeout(Policy):
    """Upclock a fixed time after the last power-intensive segment ends.

    The engine cancels a pending timer whenever a segment at or above the
    current level starts, so only region ends and timer expiry matter here.
    """

    def __init__(self, timeout_us: float = INTEL_MEASURED_TIMEOUT_US, name: str | None = None):
        if timeout_us < 0:
            raise ConfigError("timeout must be non-negative")
        self.timeout_us = float(timeout_us)
        self.name = name or f"fixed:{_fmt(timeout_us)}"

    def decide(self, event):
        if event.kind is EventKind.REGION_END:
            if self.timeout_us == 0:
                return UPCLOCK
            return arm(self.timeout_us)
        if event.kind is EventKind.TIMER_FIRED:
            return UPCLOCK
        return HOLD


class Never(Policy):
    name = "never"

    def decide(self, event):
        return HOLD


class Immediate(FixedTimeout):
    def __init__(self):
        super().__init__(0.0, name="immediate")


class BreakEvenTimeout(Policy):
    """Timer equal to the break-even time of the pair being left."""

    name = "breakeven"

    def __init__(self, table: Iterable[BreakEvenEntry]):
        self.table = break_even_lookup(table)

    def timeout_for(self, src: LicenseLevel, dst: LicenseLevel, cores: int) -> float:
        try:
            return self.table[(int(src), int(dst), cores)].t_be_us
        except KeyError:
            raise ConfigError(
                f"break-even table has no entry for L{int(src)}->L{int(dst)} at {cores} cores"
            ) from None

    def decide(self, event):
        if event.kind is EventKind.REGION_END:
            t = self.timeout_for(event.level, event.required, event.cores)
            return UPCLOCK if t == 0 else arm(t)
        if event.kind is EventKind.TIMER_FIRED:
            return UPCLOCK
        return HOLD


class HintDirected(FixedTimeout):
    """Upclock on application hints; fixed-timeout fallback otherwise."""

    def __init__(self, fallback_timeout_us: float = INTEL_MEASURED_TIMEOUT_US):
        super().__init__(fallback_timeout_us, name=f"hint:{_fmt(fallback_timeout_us)}")

    def decide(self, event):
        if event.kind is EventKind.HINT:
            return UPCLOCK if event.level > event.required else HOLD
        return super().decide(event)


class Oracle(Policy):
    """Clairvoyant policy: upclock at gap start iff the gap beats the break-even threshold.

    The threshold is compared against the gap's length at the target frequency,
    which equals its reference length whenever the target is L0.
    """

    name = "oracle"
    clairvoyant = True

    def __init__(self, table: Iterable[BreakEvenEntry]):
        self.table = break_even_lookup(table)

    def decide(self, event):
        if event.kind is not EventKind.REGION_END:
            return HOLD
        if event.clairvoyant_gap_ref_us is None:
            raise ContractViolation("oracle policy needs clairvoyant gap lengths")
        try:
            entry = self.table[(int(event.level), int(event.required), event.cores)]
        except KeyError:
            raise ConfigError(
                f"break-even table has no entry for L{int(event.level)}->"
                f"L{int(event.required)} at {event.cores} cores"
            ) from None
        gap_high = dilate(event.clairvoyant_gap_ref_us, event.f_ref_ghz, entry.f_high_ghz)
        return UPCLOCK if gap_high >= entry.gap_threshold_us else HOLD


def fixed_timeout_policy(timeout_us: float = INTEL_MEASURED_TIMEOUT_US) -> FixedTimeout:
    return FixedTimeout(timeout_us)


def break_even_timeout_policy(table: Iterable[BreakEvenEntry]) -> BreakEvenTimeout:
    return BreakEvenTimeout(table)


def hint_directed_policy(fallback_timeout_us: float = INTEL_MEASURED_TIMEOUT_US) -> HintDirected:
    return HintDirected(fallback_timeout_us)


def oracle_policy(table: Iterable[BreakEvenEntry]) -> Oracle:
    return Oracle(table)


def _fmt(x: float) -> str:
    return f"{x:g}"


def parse_policy(spec: str, freq: FrequencyTable, costs: TransitionCostTable, cores: int) -> Policy:
    """Build a policy from a CLI spec string.

    Accepted: ``fixed:<us>``, ``fixed:breakeven``, ``breakeven``, ``hint:<us>``,
    ``oracle``, ``never``, ``immediate``, ``intel-documented``.
    """
    spec = spec.strip()
    if spec in ("breakeven", "fixed:breakeven"):
        p = BreakEvenTimeout(break_even_table(freq, costs, [cores]))
        p.name = spec
        return p
    if spec == "oracle":
        return Oracle(break_even_table(freq, costs, [cores]))
    if spec == "never":
        return Never()
    if spec == "immediate":
        return Immediate()
    if spec == "intel-documented":
        return FixedTimeout(INTEL_DOCUMENTED_TIMEOUT_US, name="intel-documented")
    kind, _, arg = spec.partition(":")
    if kind in ("fixed", "hint") and arg:
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"bad timeout in policy spec {spec!r}") from None
        if value < 0:
            raise ConfigError(f"negative timeout in policy spec {spec!r}")
        p = FixedTimeout(value) if kind == "fixed" else HintDirected(value)
        p.name = spec
        return p
    raise ConfigError(f"unknown policy spec {spec!r}")
