"""Per-process power scores from license samples taken at scheduler invocations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import TraceParseError
from .model import LicenseLevel
from .policies import fixed_timeout_policy, INTEL_MEASURED_TIMEOUT_US
from .simengine import SimConfig, simulate
from .trace import SegmentClass, TraceSegment, WorkloadTrace

EMA_WEIGHT = 0.2
LONG_BURST_US = 1000.0


@dataclass(frozen=True)
class SchedEvent:
    t_us: float
    pid: int
    license: LicenseLevel


def update_score(
    s_prev: float,
    license_now: LicenseLevel,
    license_prev: LicenseLevel,
    dt_us: float,
    weight: float = EMA_WEIGHT,
    long_burst_us: float = LONG_BURST_US,
) -> float:
    # A short burst without a license change says nothing about the process.
    changed = license_now != license_prev and license_now != s_prev
    if dt_us > long_burst_us or changed:
        return weight * int(license_now) + (1.0 - weight) * s_prev
    return s_prev


def should_update(s_prev, license_now, license_prev, dt_us, long_burst_us=LONG_BURST_US) -> bool:
    return dt_us > long_burst_us or (license_now != license_prev and license_now != s_prev)


@dataclass
class ProcScore:
    score: float = 0.0
    n_updates: int = 0
    n_bursts: int = 0
    timeline: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self, with_timeline=False) -> dict:
        d = {"score": self.score, "n_updates": self.n_updates, "n_bursts": self.n_bursts}
        if with_timeline:
            d["timeline"] = [list(p) for p in self.timeline]
        return d


def classify(
    events: Sequence[SchedEvent],
    weight: float = EMA_WEIGHT,
    long_burst_us: float = LONG_BURST_US,
) -> dict[int, ProcScore]:
    """Score every pid seen in ``events``.

    Event ``i`` switches ``pid_i`` in at ``t_i``; its burst ends at the next
    scheduler invocation. The final event opens no burst.
    """
    scores: dict[int, ProcScore] = {}
    for prev, nxt in zip(events, events[1:]):
        if nxt.t_us < prev.t_us:
            raise ValueError(f"scheduler trace not time-ordered at t={nxt.t_us}")
    for e in events:
        scores.setdefault(e.pid, ProcScore())
    for start, end in zip(events, events[1:]):
        ps = scores[start.pid]
        dt = end.t_us - start.t_us
        ps.n_bursts += 1
        if should_update(ps.score, end.license, start.license, dt, long_burst_us):
            ps.score = update_score(ps.score, end.license, start.license, dt, weight, long_burst_us)
            ps.n_updates += 1
            ps.timeline.append((end.t_us, ps.score))
    return scores


# --- synthetic scheduler traces ---------------------------------------------

@dataclass(frozen=True)
class ProcSpec:
    pid: int
    pattern: tuple[tuple[SegmentClass, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(self.pattern))
        if not self.pattern:
            raise ValueError(f"process {self.pid} has an empty pattern")
        if any(d <= 0 for _, d in self.pattern):
            raise ValueError(f"process {self.pid} has a non-positive duration")

    @property
    def max_level(self) -> LicenseLevel:
        return max(c.required_level for c, _ in self.pattern)


@dataclass
class SchedTrace:
    events: list[SchedEvent]
    truth: dict[int, int]


def synth_sched_trace(
    procs: Sequence[ProcSpec],
    slice_us: float,
    horizon_us: float,
    cfg: SimConfig,
    upclock_timeout_us: float = INTEL_MEASURED_TIMEOUT_US,
    seed: int = 0,
    jitter: float = 0.2,
) -> SchedTrace:
    """Round-robin schedule replayed on the hardware timeout model.

    Slices and horizon are in reference microseconds; each slice length is
    scaled by a seeded uniform factor in ``[1 - jitter, 1 + jitter]``. Event
    timestamps are simulated wall time, and the license sampled at a switch
    is whatever the previous process left behind.
    """
    if not procs:
        raise ValueError("need at least one process")
    if slice_us <= 0:
        raise ValueError("slice must be positive")
    rng = np.random.default_rng(seed)
    cursors = {p.pid: [0, p.pattern[0][1]] for p in procs}
    segments: list[TraceSegment] = []
    slice_starts: list[tuple[int, int]] = []  # (segment index, pid)
    elapsed = 0.0
    k = 0
    while elapsed < horizon_us:
        proc = procs[k % len(procs)]
        length = slice_us * (1.0 + jitter * rng.uniform(-1.0, 1.0))
        slice_starts.append((len(segments), proc.pid))
        cur = cursors[proc.pid]
        left = length
        while left > 1e-9:
            cls, dur = proc.pattern[cur[0]]
            take = min(left, cur[1])
            segments.append(TraceSegment(cls, take))
            left -= take
            cur[1] -= take
            if cur[1] <= 1e-9:
                cur[0] = (cur[0] + 1) % len(proc.pattern)
                cur[1] = proc.pattern[cur[0]][1]
        elapsed += length
        k += 1

    report = simulate(
        WorkloadTrace(tuple(segments)), fixed_timeout_policy(upclock_timeout_us), cfg, record_timeline=True
    )
    starts = {}
    for entry in report.timeline:
        if entry[1] == "start":
            starts[entry[2]] = (entry[0], LicenseLevel(entry[3]))
    events = []
    for seg_index, pid in slice_starts:
        t, lvl = starts[seg_index]
        events.append(SchedEvent(t, pid, lvl))
    final_level = LicenseLevel(report.timeline[-1][2])
    events.append(SchedEvent(round(report.total_wall_us, 9), procs[k % len(procs)].pid, final_level))
    return SchedTrace(events, {p.pid: int(p.max_level) for p in procs})


# --- file formats ------------------------------------------------------------

def parse_sched_trace(lines: Iterable[str]) -> SchedTrace:
    events = []
    truth = {}
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError:
            raise TraceParseError("malformed JSON", lineno) from None
        if not isinstance(obj, dict):
            raise TraceParseError("expected a JSON object", lineno)
        if "meta" in obj and not events:
            truth = {int(k): int(v) for k, v in obj["meta"].get("truth", {}).items()}
            continue
        try:
            t = float(obj["t_us"])
            pid = int(obj["pid"])
            lic = LicenseLevel(int(obj["license"]))
        except (KeyError, TypeError, ValueError):
            raise TraceParseError("expected t_us, pid and license in 0..2", lineno) from None
        if events and t < events[-1].t_us:
            raise TraceParseError("events not time-ordered", lineno)
        events.append(SchedEvent(t, pid, lic))
    return SchedTrace(events, truth)


def emit_sched_trace(trace: SchedTrace) -> str:
    lines = []
    if trace.truth:
        lines.append(json.dumps({"meta": {"truth": {str(k): v for k, v in sorted(trace.truth.items())}}},
                                separators=(",", ":")))
    for e in trace.events:
        lines.append(json.dumps({"t_us": e.t_us, "pid": e.pid, "license": int(e.license)},
                                separators=(",", ":")))
    return "\n".join(lines) + "\n"


def classification_report(scores: dict[int, ProcScore], truth=None, with_timeline=False) -> dict:
    out = {}
    for pid in sorted(scores):
        d = scores[pid].to_dict(with_timeline)
        if truth and pid in truth:
            d["truth"] = truth[pid]
        out[str(pid)] = d
    return out


def timelines_csv(scores: dict[int, ProcScore]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pid", "t_us", "score"])
    for pid in sorted(scores):
        for t, s in scores[pid].timeline:
            w.writerow([pid, repr(t), repr(s)])
    return buf.getvalue()
