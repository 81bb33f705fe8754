import numpy as np

from avxdvfs import cli
from avxdvfs.model import LEVELS, break_even_lookup, break_even_table
from avxdvfs.policies import BreakEvenTimeout, FixedTimeout, HintDirected, Never, Oracle
from avxdvfs.simengine import TimeoutMode
from avxdvfs.trace import SegmentClass, TraceSegment, WorkloadTrace

import step_oracle

CLASSES = list(SegmentClass)


def random_trace(rng, max_segments=10, max_dur=200.0):
    n = int(rng.integers(1, max_segments + 1))
    segs = []
    for _ in range(n):
        cls = CLASSES[int(rng.integers(0, 3))]
        dur = float(rng.uniform(0.5, max_dur))
        hint = cls is SegmentClass.SCALAR and bool(rng.integers(0, 2))
        segs.append(TraceSegment(cls, dur, hint))
    return WorkloadTrace(tuple(segs))


def random_policy(rng, cfg):
    table = break_even_table(cfg.freq, cfg.costs, [cfg.active_cores])
    k = int(rng.integers(0, 6))
    if k == 0:
        return FixedTimeout(float(rng.uniform(0, 400)))
    if k == 1:
        return HintDirected(float(rng.uniform(0, 400)))
    if k == 2:
        return Never()
    if k == 3:
        return Oracle(table)
    if k == 4:
        return BreakEvenTimeout(table)
    return FixedTimeout(0.0)


def run_step_oracle(trace, policy, cfg, dt=0.01):
    """Translate (trace, policy, cfg) into plain arrays and run the micro-stepper."""
    req = [int(s.required_level) for s in trace]
    dur = [s.dur_ref_us for s in trace]
    hint = [s.hint for s in trace]
    freqs = [cfg.f(lvl) for lvl in LEVELS]
    cost = np.array([[cfg.costs.cost(a, b, cfg.active_cores) for b in LEVELS] for a in LEVELS])
    lookup = break_even_lookup(break_even_table(cfg.freq, cfg.costs, [cfg.active_cores]))
    tau_mat = np.zeros((3, 3))
    thr_mat = np.zeros((3, 3))
    for (a, b, _), e in lookup.items():
        tau_mat[a, b] = e.t_be_us
        thr_mat[a, b] = e.gap_threshold_us
    tau = 0.0
    if isinstance(policy, HintDirected):
        code, tau = step_oracle.HINT, policy.timeout_us
    elif isinstance(policy, FixedTimeout):
        code, tau = step_oracle.FIXED, policy.timeout_us
    elif isinstance(policy, Never):
        code = step_oracle.NEVER
    elif isinstance(policy, Oracle):
        code = step_oracle.ORACLE
    elif isinstance(policy, BreakEvenTimeout):
        code = step_oracle.BREAKEVEN
    else:
        raise TypeError(policy)
    return step_oracle.step_simulate(
        req, dur, hint, freqs, cost, code, tau, tau_mat, thr_mat,
        wall_mode=cfg.timeout_mode is TimeoutMode.WALL_CLOCK, dt=dt,
    )


def run_all_commands(tmp, tag):
    """Run every CLI command once into ``tmp``; returns name -> output bytes."""
    web = str(tmp / "web.jsonl")
    sched = str(tmp / "sched.jsonl")
    outs = {
        "web": ["gen-trace", "web", "--requests", "80", "--seed", "11", "-o", web],
        "sched": ["gen-sched", "--proc", "1=avx512:100", "--proc", "2=scalar:100", "--horizon", "20000",
                  "--seed", "2", "-o", sched],
    }
    reports = {
        "breakeven": ["breakeven", "--csv"],
        "simulate": ["simulate", "--trace", web, "--policy", "hint:670", "--timeline", "--json"],
        "compare": ["compare", "--trace", web, "--policies", "fixed:670,fixed:180,oracle", "--jobs", "2", "--csv"],
        "compete": ["compete", "--gaps", "1:800:7", "--csv"],
        "gap-saving": ["gap-saving", "--json"],
        "stats": ["stats", "--trace", web, "--json"],
        "classify": ["classify", "--input", sched, "--timeline", "--csv"],
    }
    files = {}
    for name, argv in outs.items():
        assert cli.main(argv) == 0
        files[name] = open(argv[-1], "rb").read()
    for name, argv in reports.items():
        dest = str(tmp / f"{name}.{tag}")
        assert cli.main(argv + ["-o", dest]) == 0, name
        files[name] = open(dest, "rb").read()
    return files
