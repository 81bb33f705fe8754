"""Workload traces: data model, JSONL format, statistics and a web-server generator."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, asdict
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ConfigError, TraceParseError
from .model import LicenseLevel


class SegmentClass(enum.Enum):
    SCALAR = "scalar"
    AVX2 = "avx2"
    AVX512 = "avx512"

    @property
    def required_level(self) -> LicenseLevel:
        return _REQUIRED[self]


_REQUIRED = {
    SegmentClass.SCALAR: LicenseLevel.L0,
    SegmentClass.AVX2: LicenseLevel.L1,
    SegmentClass.AVX512: LicenseLevel.L2,
}

CLASS_FOR_LEVEL = {level: cls for cls, level in _REQUIRED.items()}


@dataclass(frozen=True)
class TraceSegment:
    cls: SegmentClass
    dur_ref_us: float
    hint: bool = False

    def __post_init__(self):
        if not self.dur_ref_us > 0:
            raise ValueError("non-positive duration")
        if self.hint and self.cls is not SegmentClass.SCALAR:
            raise ValueError("hint on non-scalar segment")

    @property
    def required_level(self) -> LicenseLevel:
        return self.cls.required_level


@dataclass(frozen=True)
class WorkloadTrace:
    segments: tuple[TraceSegment, ...]
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "meta", dict(self.meta))
        if not self.segments:
            raise ValueError("empty trace")

    def __len__(self):
        return len(self.segments)

    def __iter__(self) -> Iterator[TraceSegment]:
        return iter(self.segments)

    @property
    def total_ref_us(self) -> float:
        return sum(s.dur_ref_us for s in self.segments)


def parse_trace(lines: Iterable[str]) -> WorkloadTrace:
    """Parse JSONL segments; an optional leading ``{"meta": {...}}`` line is kept as metadata."""
    segments = []
    meta = {}
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
        if "meta" in obj and not segments and not meta:
            if not isinstance(obj["meta"], dict):
                raise TraceParseError("meta must be an object", lineno)
            meta = {str(k): str(v) for k, v in obj["meta"].items()}
            continue
        try:
            cls = SegmentClass(obj.get("class"))
        except ValueError:
            raise TraceParseError(f"unknown class {obj.get('class')!r}", lineno) from None
        dur = obj.get("dur_us")
        if isinstance(dur, bool) or not isinstance(dur, (int, float)):
            raise TraceParseError("missing or non-numeric dur_us", lineno)
        if not dur > 0:
            raise TraceParseError("non-positive duration", lineno)
        hint = obj.get("hint", False)
        if not isinstance(hint, bool):
            raise TraceParseError("hint must be a boolean", lineno)
        if hint and cls is not SegmentClass.SCALAR:
            raise TraceParseError("hint on non-scalar segment", lineno)
        segments.append(TraceSegment(cls, float(dur), hint))
    if not segments:
        raise TraceParseError("trace contains no segments")
    return WorkloadTrace(tuple(segments), meta)


def emit_trace(trace: WorkloadTrace) -> str:
    """Canonical JSONL form: meta line first (if any), ``hint`` written only when true."""
    out = []
    if trace.meta:
        out.append(json.dumps({"meta": dict(sorted(trace.meta.items()))}, separators=(",", ":")))
    for s in trace.segments:
        obj = {"class": s.cls.value, "dur_us": s.dur_ref_us}
        if s.hint:
            obj["hint"] = True
        out.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(out) + "\n"


def read_trace(path: str) -> WorkloadTrace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh)


def write_trace(trace: WorkloadTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_trace(trace))


# --- statistics --------------------------------------------------------------

@dataclass
class TraceStats:
    total_us: float
    per_class_us: dict[str, float]
    avx_fraction: float
    n_segments: int
    n_hints: int
    gaps_us: list[float]
    gap_hist_edges: list[float]
    gap_hist_counts: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def scalar_gaps(trace: WorkloadTrace) -> list[float]:
    """Lengths of scalar runs delimited by L1/L2-requiring segments (edge runs included)."""
    gaps = []
    run = 0.0
    for s in trace.segments:
        if s.cls is SegmentClass.SCALAR:
            run += s.dur_ref_us
        else:
            if run > 0:
                gaps.append(run)
            run = 0.0
    if run > 0:
        gaps.append(run)
    return gaps


def trace_stats(trace: WorkloadTrace, bin_us: float = 50.0) -> TraceStats:
    per_class = {c.value: 0.0 for c in SegmentClass}
    for s in trace.segments:
        per_class[s.cls.value] += s.dur_ref_us
    total = trace.total_ref_us
    avx = per_class["avx2"] + per_class["avx512"]
    gaps = scalar_gaps(trace)
    if gaps:
        top = max(gaps)
        edges = np.arange(0.0, top + bin_us, bin_us)
        if len(edges) < 2:
            edges = np.array([0.0, bin_us])
        counts, edges = np.histogram(gaps, bins=edges)
    else:
        counts, edges = np.zeros(0, dtype=int), np.zeros(0)
    return TraceStats(
        total_us=total,
        per_class_us=per_class,
        avx_fraction=avx / total,
        n_segments=len(trace),
        n_hints=sum(1 for s in trace.segments if s.hint),
        gaps_us=gaps,
        gap_hist_edges=[float(e) for e in edges],
        gap_hist_counts=[int(c) for c in counts],
    )


# --- web-server generator ----------------------------------------------------

@dataclass(frozen=True)
class Dist:
    """Duration distribution: ``fixed``, ``lognormal`` (by mean and log-sigma) or ``exponential``."""

    kind: str
    mean: float
    sigma: float = 0.5

    def __post_init__(self):
        if self.kind not in ("fixed", "lognormal", "exponential"):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if self.mean < 0 or self.sigma < 0:
            raise ConfigError("distribution parameters must be non-negative")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(n, float(self.mean))
        if self.kind == "exponential":
            return rng.exponential(self.mean, n)
        mu = np.log(self.mean) - 0.5 * self.sigma**2
        return rng.lognormal(mu, self.sigma, n)

    def describe(self) -> str:
        if self.kind == "lognormal":
            return f"lognormal(mean={self.mean},sigma={self.sigma})"
        return f"{self.kind}(mean={self.mean})"


@dataclass(frozen=True)
class WebTraceConfig:
    n_requests: int = 1000
    decrypt_us: Dist = Dist("lognormal", 20.0, 0.5)
    encrypt_us: Dist = Dist("lognormal", 20.0, 0.5)
    process_us: Dist = Dist("lognormal", 500.0, 0.5)
    gap_us: Dist = Dist("exponential", 300.0)
    seed: int = 42

    def __post_init__(self):
        if self.n_requests < 1:
            raise ConfigError("n_requests must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in ("decrypt_us", "encrypt_us", "process_us"):
            if getattr(self, name).mean <= 0:
                raise ConfigError(f"{name} mean must be positive")

    def expected_avx_fraction(self) -> float:
        avx = self.decrypt_us.mean + self.encrypt_us.mean
        return avx / (avx + self.process_us.mean + self.gap_us.mean)


_MIN_DUR = 1e-3  # durations are rounded to nanoseconds


def _positive(values: np.ndarray) -> list[float]:
    return [max(round(float(v), 3), _MIN_DUR) for v in values]


def gen_web_trace(cfg: WebTraceConfig) -> WorkloadTrace:
    """Per request: AVX-512 decrypt, hinted scalar processing, AVX-512 encrypt, scalar gap."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_requests
    dec = _positive(cfg.decrypt_us.sample(rng, n))
    proc = _positive(cfg.process_us.sample(rng, n))
    enc = _positive(cfg.encrypt_us.sample(rng, n))
    gap = [round(float(v), 3) for v in cfg.gap_us.sample(rng, n)]

    segs = []
    for i in range(n):
        segs.append(TraceSegment(SegmentClass.AVX512, dec[i]))
        segs.append(TraceSegment(SegmentClass.SCALAR, proc[i], hint=True))
        segs.append(TraceSegment(SegmentClass.AVX512, enc[i]))
        if gap[i] > 0:
            segs.append(TraceSegment(SegmentClass.SCALAR, gap[i]))
    meta = {
        "generator": "web",
        "seed": str(cfg.seed),
        "n_requests": str(n),
        "decrypt_us": cfg.decrypt_us.describe(),
        "encrypt_us": cfg.encrypt_us.describe(),
        "process_us": cfg.process_us.describe(),
        "gap_us": cfg.gap_us.describe(),
    }
    return WorkloadTrace(tuple(segs), meta)
