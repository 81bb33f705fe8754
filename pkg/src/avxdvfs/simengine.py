"""Event-driven simulation of one core's license timeline under a DVFS policy."""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field

from .errors import ConfigError, ContractViolation, DomainError
from .model import (
    FrequencyTable,
    LicenseLevel,
    PerformanceModel,
    TransitionCostTable,
    LEVELS,
    dilate,
)
from .policies import (
    ActionKind,
    EventKind,
    FixedTimeout,
    Immediate,
    Policy,
    PolicyAction,
    PolicyEvent,
)
from .trace import SegmentClass, TraceSegment, WorkloadTrace

L0 = LicenseLevel.L0


class TimeoutMode(enum.Enum):
    WALL_CLOCK = "wallclock"
    # Timer counts consumed reference time; reproduces the published single-gap saving.
    TRACE_TIME = "tracetime"


@dataclass(frozen=True)
class SimConfig:
    freq: FrequencyTable
    costs: TransitionCostTable
    active_cores: int = 1
    perf: PerformanceModel = field(default_factory=PerformanceModel)
    timeout_mode: TimeoutMode = TimeoutMode.WALL_CLOCK

    def __post_init__(self):
        self.freq.bucket(self.active_cores)  # raises ConfigError when out of range

    @property
    def f_ref(self) -> float:
        return self.freq.freq(self.active_cores, self.perf.reference_level)

    def f(self, level: LicenseLevel) -> float:
        return self.freq.freq(self.active_cores, level)

    def to_dict(self) -> dict:
        return {
            "freq": self.freq.to_dict(),
            "costs": self.costs.to_dict(),
            "active_cores": self.active_cores,
            "perf": self.perf.kind.value,
            "timeout_mode": self.timeout_mode.value,
        }


@dataclass
class SimReport:
    policy_name: str
    total_wall_us: float
    residency_us: dict[int, float]
    transitions: dict[tuple[int, int], int]
    transition_overhead_us: float
    hints_taken: int
    timeline: list[tuple] | None = None

    @property
    def n_transitions(self) -> int:
        return sum(self.transitions.values())

    def to_dict(self) -> dict:
        d = {
            "policy": self.policy_name,
            "total_wall_us": self.total_wall_us,
            "residency_us": {f"L{k}": v for k, v in sorted(self.residency_us.items())},
            "transitions": {f"{a}->{b}": n for (a, b), n in sorted(self.transitions.items())},
            "transition_overhead_us": self.transition_overhead_us,
            "hints_taken": self.hints_taken,
        }
        if self.timeline is not None:
            d["timeline"] = [list(e) for e in self.timeline]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


class _Run:
    """Mutable state of a single simulation; never shared between runs."""

    def __init__(self, trace, policy, cfg, record):
        self.trace = trace
        self.policy = policy
        self.cfg = cfg
        self.f_ref = cfg.f_ref
        self.freqs = {lvl: cfg.f(lvl) for lvl in LEVELS}
        self.wall_mode = cfg.timeout_mode is TimeoutMode.WALL_CLOCK
        self.level = L0
        self.wall = 0.0
        self.tref = 0.0
        self.deadline = None
        self.residency = {int(lvl): 0.0 for lvl in LEVELS}
        self.transitions = Counter()
        self.overhead = 0.0
        self.hints_taken = 0
        self.timeline = [] if record else None
        self.required = L0
        self.gaps = _clairvoyant_gaps(trace.segments) if policy.clairvoyant else None

    def log(self, *event):
        if self.timeline is not None:
            self.timeline.append((round(self.wall, 9), *event))

    def clock(self):
        return self.wall if self.wall_mode else self.tref

    def transition(self, target):
        stall = self.cfg.costs.cost(self.level, target, self.cfg.active_cores)
        self.log("transition", int(self.level), int(target), stall)
        self.transitions[(int(self.level), int(target))] += 1
        self.overhead += stall
        self.wall += stall
        self.level = target

    def event(self, kind, index=None):
        gap = None
        if self.gaps is not None and kind is EventKind.REGION_END:
            gap = self.gaps[index]
        return PolicyEvent(
            kind, self.level, self.required, self.cfg.active_cores, self.f_ref, gap
        )

    def apply(self, action: PolicyAction) -> bool:
        """Apply a policy action; returns True if an upclock transition happened."""
        if action.kind is ActionKind.HOLD:
            return False
        if action.kind is ActionKind.ARM_TIMER:
            self.deadline = self.clock() + action.delay_us
            return False
        target = self.required if action.target is None else LicenseLevel(action.target)
        if target < self.required:
            raise ContractViolation(
                f"policy {self.policy.name} requested L{int(target)} while the "
                f"running segment requires L{int(self.required)}"
            )
        self.deadline = None
        if target < self.level:
            self.transition(target)
            return True
        return False

    def run_work(self, work):
        dt = dilate(work, self.f_ref, self.freqs[self.level])
        self.wall += dt
        self.tref += work
        self.residency[int(self.level)] += dt

    def segment(self, index: int, seg: TraceSegment, prev_required):
        req = seg.required_level
        self.required = req
        self.log("start", index, int(self.level))
        if req >= self.level:
            # power-intensive code at or above the current license restarts the hold
            self.deadline = None
            if req > self.level:
                self.transition(req)
        self.apply(self.policy.decide(self.event(EventKind.SEGMENT_START)))
        if req < self.level and prev_required is not None and req < prev_required:
            self.apply(self.policy.decide(self.event(EventKind.REGION_END, index)))
        if seg.hint:
            if self.apply(self.policy.decide(self.event(EventKind.HINT))):
                self.hints_taken += 1

        remaining = seg.dur_ref_us
        while remaining > 0:
            if self.level <= req:
                self.deadline = None
            if self.deadline is not None:
                left = self.deadline - self.clock()
                if self.wall_mode:
                    possible = max(left, 0.0) * self.freqs[self.level] / self.f_ref
                else:
                    possible = max(left, 0.0)
                if possible < remaining:
                    if possible > 0:
                        self.run_work(possible)
                        remaining -= possible
                    self.deadline = None
                    self.log("timer", int(self.level))
                    self.apply(self.policy.decide(self.event(EventKind.TIMER_FIRED)))
                    continue
            self.run_work(remaining)
            remaining = 0.0

    def run(self) -> SimReport:
        prev = None
        for i, seg in enumerate(self.trace.segments):
            self.segment(i, seg, prev)
            prev = seg.required_level
        self.log("end", int(self.level))
        return SimReport(
            policy_name=self.policy.name,
            total_wall_us=self.wall,
            residency_us=dict(self.residency),
            transitions=dict(self.transitions),
            transition_overhead_us=self.overhead,
            hints_taken=self.hints_taken,
            timeline=self.timeline,
        )


def _clairvoyant_gaps(segments) -> list[float]:
    """Reference length of the run of segments starting at i whose required level is <= that of i."""
    n = len(segments)
    gaps = [0.0] * n
    for i in range(n):
        if i > 0 and segments[i].required_level < segments[i - 1].required_level:
            r = segments[i].required_level
            total = 0.0
            j = i
            while j < n and segments[j].required_level <= r:
                total += segments[j].dur_ref_us
                j += 1
            gaps[i] = total
    return gaps


def simulate(trace: WorkloadTrace, policy: Policy, cfg: SimConfig, record_timeline: bool = False) -> SimReport:
    """Replay ``trace`` on one core under ``policy``.

    Downclocks are forced at the start of a segment needing a higher license.
    Upclocks happen only when the policy asks for them (timer expiry, hint,
    or an immediate decision at a region end); each transition is charged as
    a pure stall.
    """
    return _Run(trace, policy, cfg, record_timeline).run()


def single_gap_saving(gap_ref_us: float, cfg: SimConfig, timeout_us: float) -> float:
    """Wall time saved by upclocking at gap start instead of after ``timeout_us``.

    Uses a trace of one AVX-512 segment followed by a scalar gap; both runs
    pay the same two transitions, so the difference is pure dilation.
    """
    f_high, f_low = cfg.f(LicenseLevel.L0), cfg.f(LicenseLevel.L2)
    if cfg.timeout_mode is TimeoutMode.WALL_CLOCK:
        fires_at_ref = timeout_us * f_low / cfg.f_ref
    else:
        fires_at_ref = timeout_us
    if timeout_us < 0:
        raise DomainError("timeout must be non-negative")
    if not gap_ref_us > fires_at_ref:
        raise DomainError("timeout never fires")
    if f_high == f_low:
        return 0.0
    trace = WorkloadTrace((
        TraceSegment(SegmentClass.AVX512, 100.0),
        TraceSegment(SegmentClass.SCALAR, gap_ref_us),
    ))
    late = simulate(trace, FixedTimeout(timeout_us), cfg)
    eager = simulate(trace, Immediate(), cfg)
    return late.total_wall_us - eager.total_wall_us


@dataclass
class Comparison:
    baseline: str
    reports: list[SimReport]
    speedups: list[float]

    def rows(self) -> list[dict]:
        return [
            {
                "name": r.policy_name,
                "wall_us": r.total_wall_us,
                "speedup": s,
                "transitions": r.n_transitions,
                "overhead_us": r.transition_overhead_us,
            }
            for r, s in zip(self.reports, self.speedups)
        ]

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "rows": self.rows(),
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["name", "wall_us", "speedup", "transitions", "overhead_us"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def compare_policies(
    trace: WorkloadTrace,
    policies: list[Policy],
    cfg: SimConfig,
    baseline: str,
    jobs: int = 1,
) -> Comparison:
    if len(policies) < 2:
        raise ConfigError("need at least two policies to compare")
    names = [p.name for p in policies]
    if baseline not in names:
        raise ConfigError(f"unknown baseline {baseline!r}; have {', '.join(names)}")
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            reports = list(pool.map(simulate, [trace] * len(policies), policies, [cfg] * len(policies)))
    else:
        reports = [simulate(trace, p, cfg) for p in policies]
    base = reports[names.index(baseline)].total_wall_us
    speedups = [base / r.total_wall_us - 1.0 for r in reports]
    return Comparison(baseline, reports, speedups)
