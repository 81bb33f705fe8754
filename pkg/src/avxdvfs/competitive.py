"""Ski-rental style competitive analysis of upclock policies on single-gap instances.

An instance is a gap of ``gap`` reference microseconds of ``to``-level code
sandwiched between two ``from``-level segments. A policy's cost is the wall
time it spends on the gap (including any round-trip stalls it triggers) in
excess of running the gap at the ``to`` frequency for free. The clairvoyant
optimum either stays low for the whole gap or pays the round trip at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import LicenseLevel, dilate
from .policies import Policy
from .simengine import SimConfig, simulate
from .trace import CLASS_FOR_LEVEL, TraceSegment, WorkloadTrace

_EPS = 1e-9
_PAD_REF_US = 10.0


@dataclass
class GapSweepResult:
    gaps_us: list[float]
    ratio: list[float]
    policy_cost_us: list[float]
    oracle_cost_us: list[float]
    max_ratio: float

    @property
    def argmax_gap(self) -> float:
        # first gap reaching the maximum, ignoring float noise
        top = self.max_ratio - 1e-9
        return next(g for g, r in zip(self.gaps_us, self.ratio) if r >= top)

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "argmax_gap_us": self.argmax_gap,
            "gaps_us": self.gaps_us,
            "ratio": self.ratio,
            "policy_cost_us": self.policy_cost_us,
            "oracle_cost_us": self.oracle_cost_us,
        }


def round_trip_cost(pair: tuple[LicenseLevel, LicenseLevel], cfg: SimConfig) -> float:
    hi, lo = pair
    n = cfg.active_cores
    return cfg.costs.cost(hi, lo, n) + cfg.costs.cost(lo, hi, n)


def oracle_cost(gap_ref_us: float, pair, cfg: SimConfig) -> float:
    """min(stay low for the whole gap, pay the round trip)."""
    hi, lo = pair
    excess = dilate(gap_ref_us, cfg.f_ref, cfg.f(hi)) - dilate(gap_ref_us, cfg.f_ref, cfg.f(lo))
    return min(excess, round_trip_cost(pair, cfg))


def policy_cost(policy: Policy, gap_ref_us: float, pair, cfg: SimConfig) -> float:
    hi, lo = pair
    pad = TraceSegment(CLASS_FOR_LEVEL[hi], _PAD_REF_US)
    trace = WorkloadTrace((pad, TraceSegment(CLASS_FOR_LEVEL[lo], gap_ref_us), pad))
    report = simulate(trace, policy, cfg)
    fixed = (
        cfg.costs.cost(LicenseLevel.L0, hi, cfg.active_cores)
        + 2 * dilate(_PAD_REF_US, cfg.f_ref, cfg.f(hi))
        + dilate(gap_ref_us, cfg.f_ref, cfg.f(lo))
    )
    return report.total_wall_us - fixed


def competitive_sweep(policy: Policy, pair, cfg: SimConfig, gaps) -> GapSweepResult:
    hi, lo = LicenseLevel(pair[0]), LicenseLevel(pair[1])
    if not hi > lo:
        raise ConfigError(f"pair must go from a higher to a lower level, got {pair}")
    gaps = [float(g) for g in gaps]
    if not gaps:
        raise ConfigError("empty gap list")
    if min(gaps) <= 0:
        raise ConfigError("gaps must be positive")
    pcost, ocost, ratio = [], [], []
    for g in gaps:
        p = policy_cost(policy, g, (hi, lo), cfg)
        o = oracle_cost(g, (hi, lo), cfg)
        pcost.append(p)
        ocost.append(o)
        if o > _EPS:
            ratio.append(p / o)
        else:
            ratio.append(1.0 if p <= _EPS else float("inf"))
    return GapSweepResult(gaps, ratio, pcost, ocost, max(ratio))


def parse_range(spec: str) -> list[float]:
    """``start:stop:step`` inclusive of ``stop`` when it lies on the grid."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ConfigError(f"malformed range {spec!r}, expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"empty or invalid range {spec!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]
