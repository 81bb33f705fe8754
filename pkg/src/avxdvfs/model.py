"""Frequency, transition-cost and break-even model.

Frequencies are in GHz, durations in microseconds. Work is measured in
"reference microseconds": the time a piece of code takes at the reference
frequency (the L0 frequency of the configured core bucket).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ConfigError, DomainError


class LicenseLevel(enum.IntEnum):
    """Power license level; higher means more power-intensive, lower frequency."""

    L0 = 0
    L1 = 1
    L2 = 2


LEVELS = tuple(LicenseLevel)

# (high-level, low-level) pairs, i.e. the upclock direction of each round trip.
DOWNWARD_PAIRS = (
    (LicenseLevel.L1, LicenseLevel.L0),
    (LicenseLevel.L2, LicenseLevel.L0),
    (LicenseLevel.L2, LicenseLevel.L1),
)


@dataclass(frozen=True)
class FrequencyBucket:
    max_cores: int
    l0: float
    l1: float
    l2: float

    def freq(self, level: LicenseLevel) -> float:
        return (self.l0, self.l1, self.l2)[int(level)]


@dataclass(frozen=True)
class FrequencyTable:
    """Maximum frequency per (active-core bucket, license level)."""

    buckets: tuple[FrequencyBucket, ...]

    def __post_init__(self):
        object.__setattr__(self, "buckets", tuple(self.buckets))
        if not self.buckets:
            raise ConfigError("frequency table has no buckets")
        prev = None
        for b in self.buckets:
            if b.max_cores < 1:
                raise ConfigError(f"bucket max_cores must be positive, got {b.max_cores}")
            if not (b.l0 >= b.l1 >= b.l2 > 0):
                raise ConfigError(
                    f"bucket <= {b.max_cores} cores: need l0 >= l1 >= l2 > 0, "
                    f"got {b.l0}/{b.l1}/{b.l2}"
                )
            if prev is not None:
                if b.max_cores <= prev.max_cores:
                    raise ConfigError("bucket boundaries must be strictly increasing")
                if b.l0 > prev.l0 or b.l1 > prev.l1 or b.l2 > prev.l2:
                    raise ConfigError(
                        f"frequency increases with core count at bucket <= {b.max_cores}"
                    )
            prev = b

    @property
    def max_cores(self) -> int:
        return self.buckets[-1].max_cores

    def bucket(self, cores: int) -> FrequencyBucket:
        if cores < 1:
            raise ConfigError(f"active core count must be positive, got {cores}")
        for b in self.buckets:
            if b.max_cores >= cores:
                return b
        raise ConfigError(f"{cores} active cores exceeds table range (max {self.max_cores})")

    def freq(self, cores: int, level: LicenseLevel) -> float:
        return self.bucket(cores).freq(level)

    def to_dict(self) -> dict:
        return {
            "buckets": [
                {"max_cores": b.max_cores, "l0": b.l0, "l1": b.l1, "l2": b.l2}
                for b in self.buckets
            ]
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FrequencyTable":
        try:
            buckets = [
                FrequencyBucket(int(b["max_cores"]), float(b["l0"]), float(b["l1"]), float(b["l2"]))
                for b in doc["buckets"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed frequency table: {exc!r}") from exc
        return cls(tuple(buckets))


@dataclass(frozen=True)
class TransitionCostTable:
    """Stall-equivalent cost of each license transition.

    With ``flat_us`` set, every non-identity transition costs that value and
    ``entries`` is ignored.
    """

    entries: Mapping[tuple[int, int, int], float] = field(default_factory=dict)
    flat_us: float | None = None

    def __post_init__(self):
        cleaned = {}
        for (a, b, cores), v in dict(self.entries).items():
            v = float(v)
            if v < 0:
                raise ConfigError(f"negative transition cost {v} for {a}->{b} @ {cores} cores")
            cleaned[(int(a), int(b), int(cores))] = v
        object.__setattr__(self, "entries", cleaned)
        if self.flat_us is not None:
            if self.flat_us < 0:
                raise ConfigError(f"negative flat transition cost {self.flat_us}")
            object.__setattr__(self, "flat_us", float(self.flat_us))

    def cost(self, src: LicenseLevel, dst: LicenseLevel, cores: int) -> float:
        if src == dst:
            return 0.0
        if self.flat_us is not None:
            return self.flat_us
        try:
            return self.entries[(int(src), int(dst), int(cores))]
        except KeyError:
            raise ConfigError(
                f"no transition cost for L{int(src)}->L{int(dst)} at {cores} cores"
            ) from None

    def to_dict(self) -> dict:
        if self.flat_us is not None:
            return {"flat_us": self.flat_us}
        return {
            "entries": [
                {"from": a, "to": b, "cores": c, "stall_us": v}
                for (a, b, c), v in sorted(self.entries.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1]))
            ]
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TransitionCostTable":
        try:
            if "flat_us" in doc:
                return cls(flat_us=float(doc["flat_us"]))
            entries = {
                (int(e["from"]), int(e["to"]), int(e["cores"])): float(e["stall_us"])
                for e in doc["entries"]
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed cost table: {exc!r}") from exc
        for a, b, _ in entries:
            if a not in (0, 1, 2) or b not in (0, 1, 2):
                raise ConfigError(f"unknown license level in cost entry {a}->{b}")
        return cls(entries=entries)


class PerfKind(enum.Enum):
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class PerformanceModel:
    """Work rate as a function of frequency. Only the proportional model exists."""

    kind: PerfKind = PerfKind.PROPORTIONAL
    reference_level: LicenseLevel = LicenseLevel.L0


@dataclass(frozen=True)
class BreakEvenEntry:
    from_level: LicenseLevel
    to_level: LicenseLevel
    active_cores: int
    t_total_overhead_us: float
    t_be_us: float
    gap_threshold_us: float
    f_high_ghz: float
    f_low_ghz: float

    def to_dict(self) -> dict:
        return {
            "from": int(self.from_level),
            "to": int(self.to_level),
            "cores": self.active_cores,
            "f_high_ghz": self.f_high_ghz,
            "f_low_ghz": self.f_low_ghz,
            "t_o_us": self.t_total_overhead_us,
            "t_be_us": self.t_be_us,
            "gap_threshold_us": self.gap_threshold_us,
        }


def break_even_time(f_high: float, f_low: float, t_o: float) -> float:
    """Gap length after which running at ``f_high`` pays for a round trip.

    Solves ``f_low * t = f_high * (t - t_o)`` for ``t``.
    """
    if not f_low > 0:
        raise DomainError(f"frequency must be positive, got {f_low}")
    if f_high <= f_low:
        raise DomainError("no frequency headroom, break-even undefined")
    if t_o < 0:
        raise DomainError(f"overhead must be non-negative, got {t_o}")
    return f_high * t_o / (f_high - f_low)


def dilate(duration_ref: float, f_ref: float, f_actual: float) -> float:
    """Wall time of work that takes ``duration_ref`` at ``f_ref`` when run at ``f_actual``."""
    if f_ref <= 0 or f_actual <= 0:
        raise DomainError("frequencies must be positive")
    if duration_ref < 0:
        raise DomainError(f"duration must be non-negative, got {duration_ref}")
    return duration_ref * f_ref / f_actual


def break_even_table(
    freq: FrequencyTable,
    costs: TransitionCostTable,
    cores: Iterable[int],
) -> list[BreakEvenEntry]:
    rows = []
    for n in cores:
        for hi, lo in DOWNWARD_PAIRS:
            try:
                t_o = costs.cost(lo, hi, n) + costs.cost(hi, lo, n)
            except ConfigError as exc:
                raise ConfigError(f"pair L{int(hi)}->L{int(lo)}: {exc}") from None
            f_high = freq.freq(n, lo)
            f_low = freq.freq(n, hi)
            t_be = break_even_time(f_high, f_low, t_o)
            rows.append(
                BreakEvenEntry(hi, lo, n, t_o, t_be, t_be - t_o, f_high, f_low)
            )
    return rows


def break_even_lookup(rows: Iterable[BreakEvenEntry]) -> dict[tuple[int, int, int], BreakEvenEntry]:
    return {(int(r.from_level), int(r.to_level), r.active_cores): r for r in rows}


# --- built-in presets --------------------------------------------------------

GOLD6130 = FrequencyTable((
    FrequencyBucket(2, 3.7, 3.6, 3.5),
    FrequencyBucket(4, 3.5, 3.4, 3.1),
    FrequencyBucket(8, 3.4, 3.1, 2.4),
    FrequencyBucket(12, 3.1, 2.6, 2.1),
    FrequencyBucket(16, 2.8, 2.4, 1.9),
))

# 14-core part; AVX offsets as configured for the single-gap experiments.
I9_7940X = FrequencyTable((FrequencyBucket(14, 3.1, 2.7, 2.4),))

# Mean overheads on a Xeon Gold 6130, indexed by active cores 1..16.
_DOWN_L0_L1 = (18.3831, 18.3701, 18.7486, 18.9329, 17.7967, 17.7583, 17.1102, 17.8264,
               15.7571, 15.7666, 15.7953, 15.8192, 16.1483, 16.3903, 16.565, 16.3513)
_DOWN_L0_L2 = (27.8095, 28.0433, 26.9738, 26.7712, 22.7115, 22.9779, 22.8565, 24.2017,
               23.28, 23.299, 23.3228, 24.0869, 22.9453, 22.2663, 23.1522, 23.1068)
_DOWN_L1_L2 = (17.0681, 17.9898, 16.609, 17.199, 12.8568, 12.8128, 12.383, 12.6608,
               14.4816, 14.4785, 13.7233, 13.7987, 13.2402, 12.97, 13.1401, 14.3547)
_UP_L1_L0 = (9.12968, 9.89633, 9.19064, 9.27862, 9.16189, 9.20446, 9.16998, 10.5573,
             9.54123, 9.59297, 9.61289, 9.84082, 9.61627, 9.63797, 9.66503, 9.56553)
_UP_L2_L0 = (9.15986, 9.43172, 9.24175, 9.42288, 9.36885, 9.43908, 9.49606, 10.815,
             9.66177, 9.7525, 9.66297, 10.5623, 9.78831, 9.76628, 9.88321, 9.72921)
_UP_L2_L1 = (9.13772, 9.32953, 8.79505, 9.40442, 9.40862, 9.44813, 9.46255, 10.6957,
             9.80298, 9.81613, 9.88233, 10.2016, 9.55865, 9.59252, 9.65426, 9.68098)


def _measured_entries() -> dict:
    series = {
        (0, 1): _DOWN_L0_L1, (0, 2): _DOWN_L0_L2, (1, 2): _DOWN_L1_L2,
        (1, 0): _UP_L1_L0, (2, 0): _UP_L2_L0, (2, 1): _UP_L2_L1,
    }
    return {
        (a, b, n + 1): v
        for (a, b), values in series.items()
        for n, v in enumerate(values)
    }


GOLD6130_MEASURED = TransitionCostTable(entries=_measured_entries())
FLAT16 = TransitionCostTable(flat_us=16.0)

FREQ_PRESETS = {"gold6130": GOLD6130, "i9-7940X": I9_7940X}
COST_PRESETS = {"gold6130-measured": GOLD6130_MEASURED, "flat16": FLAT16}


def load_freq_table(name_or_path: str) -> FrequencyTable:
    if name_or_path in FREQ_PRESETS:
        return FREQ_PRESETS[name_or_path]
    return FrequencyTable.from_dict(_read_json(name_or_path))


def load_cost_table(name_or_path: str) -> TransitionCostTable:
    if name_or_path in COST_PRESETS:
        return COST_PRESETS[name_or_path]
    return TransitionCostTable.from_dict(_read_json(name_or_path))


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such preset or file: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
