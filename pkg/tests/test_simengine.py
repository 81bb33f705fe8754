import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avxdvfs.errors import ConfigError, ContractViolation, DomainError
from avxdvfs.model import FLAT16, GOLD6130, GOLD6130_MEASURED, I9_7940X, LicenseLevel as L, dilate
from avxdvfs.policies import (
    ActionKind,
    EventKind,
    FixedTimeout,
    HintDirected,
    Immediate,
    Never,
    Policy,
    PolicyAction,
)
from avxdvfs.simengine import SimConfig, TimeoutMode, compare_policies, simulate, single_gap_saving
from avxdvfs.trace import SegmentClass as C, TraceSegment as S, WorkloadTrace, gen_web_trace, WebTraceConfig

from helpers import random_policy, random_trace, run_step_oracle


def tr(*segs):
    return WorkloadTrace(tuple(S(*s) for s in segs))


def test_scalar_only(i9_wall):
    r = simulate(tr((C.SCALAR, 1000.0)), FixedTimeout(670), i9_wall)
    assert r.total_wall_us == 1000.0
    assert r.transitions == {}


def test_hand_computed_wallclock(i9_wall):
    r = simulate(tr((C.AVX512, 100.0), (C.SCALAR, 2000.0)), FixedTimeout(670), i9_wall)
    scalar = 670 + 16 + (2000 - 670 * 2.4 / 3.1)
    assert scalar == pytest.approx(2167.29, abs=0.01)
    assert r.total_wall_us == pytest.approx(16 + 100 * 3.1 / 2.4 + scalar, abs=1e-9)
    assert r.total_wall_us == pytest.approx(2312.46, abs=0.01)
    assert r.transitions == {(0, 2): 1, (2, 0): 1}


def test_hand_computed_tracetime(i9_trace):
    r = simulate(tr((C.AVX512, 100.0), (C.SCALAR, 2000.0)), FixedTimeout(670), i9_trace)
    scalar = 670 * 3.1 / 2.4 + 16 + 1330
    assert scalar == pytest.approx(2211.42, abs=0.01)
    assert r.total_wall_us == pytest.approx(2356.58, abs=0.01)


def test_timeline_records_events(i9_wall):
    r = simulate(tr((C.AVX512, 100.0), (C.SCALAR, 2000.0)), FixedTimeout(670), i9_wall, record_timeline=True)
    kinds = [e[1] for e in r.timeline]
    assert kinds == ["start", "transition", "start", "timer", "transition", "end"]
    timer = r.timeline[3]
    assert timer[0] == pytest.approx(16 + 100 * 3.1 / 2.4 + 670, abs=1e-6)


class BadPolicy(Policy):
    name = "bad"

    def decide(self, event):
        if event.kind is EventKind.REGION_END:
            return PolicyAction(ActionKind.UPCLOCK_NOW, target=L.L0)
        return PolicyAction(ActionKind.HOLD)


def test_contract_violation(i9_wall):
    # AVX-512 -> AVX2 region end; L0 would be below the AVX2 requirement
    with pytest.raises(ContractViolation):
        simulate(tr((C.AVX512, 10.0), (C.AVX2, 100.0)), BadPolicy(), i9_wall)


def _configs():
    return [
        SimConfig(I9_7940X, FLAT16),
        SimConfig(I9_7940X, FLAT16, timeout_mode=TimeoutMode.TRACE_TIME),
        SimConfig(GOLD6130, GOLD6130_MEASURED, active_cores=5),
        SimConfig(GOLD6130, GOLD6130_MEASURED, active_cores=13, timeout_mode=TimeoutMode.TRACE_TIME),
    ]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(range(4)))
def test_invariants_random(seed, cfg_index):
    rng = np.random.default_rng(seed)
    cfg = _configs()[cfg_index]
    trace = random_trace(rng, max_segments=12, max_dur=800)
    policy = random_policy(rng, cfg)
    r = simulate(trace, policy, cfg)
    total = sum(r.residency_us.values()) + r.transition_overhead_us
    assert r.total_wall_us == pytest.approx(total, rel=1e-9)
    floor = sum(dilate(s.dur_ref_us, cfg.f_ref, cfg.f(s.required_level)) for s in trace)
    assert r.total_wall_us >= floor - 1e-9
    assert all(n >= 0 for n in r.transitions.values())
    assert simulate(trace, policy, cfg).to_json() == r.to_json()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(range(4)))
def test_matches_step_oracle(seed, cfg_index):
    rng = np.random.default_rng(seed)
    cfg = _configs()[cfg_index]
    trace = random_trace(rng)
    policy = random_policy(rng, cfg)
    r = simulate(trace, policy, cfg)
    wall, res, overhead, n_trans = run_step_oracle(trace, policy, cfg)
    assert r.total_wall_us == pytest.approx(wall, abs=0.1)
    assert r.n_transitions == n_trans


def test_extreme_baselines(i9_wall):
    trace = gen_web_trace(WebTraceConfig(n_requests=50, seed=3))
    reports = [simulate(trace, p, i9_wall) for p in (Never(), FixedTimeout(670), FixedTimeout(180),
                                                     HintDirected(670), Immediate())]
    never, *_, immediate = reports
    assert never.residency_us[2] == max(r.residency_us[2] for r in reports)
    assert immediate.n_transitions == max(r.n_transitions for r in reports)


def test_single_gap_saving(i9_wall, i9_trace):
    assert single_gap_saving(5000, i9_trace, 670) == pytest.approx(195.4, abs=0.05)
    assert single_gap_saving(5000, i9_wall, 670) == pytest.approx(670 * 0.7 / 3.1, abs=1e-6)
    assert single_gap_saving(5000, i9_wall, 670) == pytest.approx(151.3, abs=0.05)
    assert single_gap_saving(5000, i9_wall, 0) == 0
    assert single_gap_saving(5000, SimConfig(GOLD6130, GOLD6130_MEASURED, 9), 0) == 0


def test_single_gap_saving_closed_forms():
    for cores in (1, 5, 9, 13):
        for mode in TimeoutMode:
            cfg = SimConfig(GOLD6130, GOLD6130_MEASURED, cores, timeout_mode=mode)
            fh, fl = cfg.f(L.L0), cfg.f(L.L2)
            expected = 300 * (fh / fl - 1) if mode is TimeoutMode.TRACE_TIME else 300 * (1 - fl / fh)
            assert single_gap_saving(4000, cfg, 300) == pytest.approx(expected, rel=1e-9)


def test_single_gap_too_short(i9_wall, i9_trace):
    with pytest.raises(DomainError, match="timeout never fires"):
        single_gap_saving(500, i9_wall, 670)  # 670 us at 2.4 GHz covers 518.7 us of work
    with pytest.raises(DomainError, match="timeout never fires"):
        single_gap_saving(600, i9_trace, 670)


def test_compare_all_scalar(i9_wall):
    res = compare_policies(tr((C.SCALAR, 500.0), (C.SCALAR, 5.0)), [FixedTimeout(670), Immediate()],
                           i9_wall, "fixed:670")
    assert res.speedups == [0.0, 0.0]


def test_compare_errors(i9_wall):
    t = tr((C.SCALAR, 1.0))
    with pytest.raises(ConfigError, match="unknown baseline"):
        compare_policies(t, [FixedTimeout(670), Immediate()], i9_wall, "fixed:1")
    with pytest.raises(ConfigError):
        compare_policies(t, [FixedTimeout(670)], i9_wall, "fixed:670")


def test_compare_csv_and_parallel(i9_wall):
    trace = gen_web_trace(WebTraceConfig(n_requests=30, seed=1))
    pols = [FixedTimeout(670), FixedTimeout(180), HintDirected(670)]
    serial = compare_policies(trace, pols, i9_wall, "fixed:670")
    parallel = compare_policies(trace, pols, i9_wall, "fixed:670", jobs=2)
    assert serial.to_csv() == parallel.to_csv()
    lines = serial.to_csv().splitlines()
    assert lines[0] == "name,wall_us,speedup,transitions,overhead_us"
    assert [l.split(",")[0] for l in lines[1:]] == ["fixed:670", "fixed:180", "hint:670"]
    assert serial.speedups[0] == 0.0
