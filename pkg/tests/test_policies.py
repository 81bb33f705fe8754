import numpy as np
import pytest

from avxdvfs.competitive import competitive_sweep, oracle_cost, parse_range, policy_cost
from avxdvfs.errors import ConfigError, ContractViolation
from avxdvfs.model import (
    GOLD6130,
    GOLD6130_MEASURED,
    LicenseLevel as L,
    TransitionCostTable,
    break_even_lookup,
    break_even_table,
)
from avxdvfs.policies import (
    EventKind,
    FixedTimeout,
    HintDirected,
    Immediate,
    Never,
    Oracle,
    PolicyEvent,
    BreakEvenTimeout,
    break_even_timeout_policy,
    fixed_timeout_policy,
    hint_directed_policy,
    oracle_policy,
    parse_policy,
)
from avxdvfs.simengine import SimConfig, simulate
from avxdvfs.trace import SegmentClass as C, TraceSegment as S, WorkloadTrace


def tr(*segs):
    return WorkloadTrace(tuple(S(*s) for s in segs))


def timer_times(report):
    return [e[0] for e in report.timeline if e[1] == "timer"]


def region_start(report, index):
    return next(e[0] for e in report.timeline if e[1] == "start" and e[2] == index)


def test_fixed_timeout_fires_at_timeout(i9_wall):
    r = simulate(tr((C.AVX512, 10.0), (C.SCALAR, 700.0)), fixed_timeout_policy(670), i9_wall, record_timeline=True)
    assert timer_times(r) == [pytest.approx(region_start(r, 1) + 670)]


def test_fixed_timeout_canceled_by_avx(i9_wall):
    r = simulate(tr((C.AVX512, 10.0), (C.SCALAR, 300.0), (C.AVX512, 10.0), (C.SCALAR, 50.0)),
                 fixed_timeout_policy(670), i9_wall)
    assert r.transitions == {(0, 2): 1}


def test_fixed_zero_is_immediate(i9_wall):
    trace = tr((C.AVX512, 10.0), (C.SCALAR, 300.0), (C.AVX2, 40.0), (C.SCALAR, 90.0, True))
    a = simulate(trace, fixed_timeout_policy(0), i9_wall).to_dict()
    b = simulate(trace, Immediate(), i9_wall).to_dict()
    a.pop("policy"), b.pop("policy")
    assert a == b


def test_break_even_timeouts():
    table = break_even_table(GOLD6130, GOLD6130_MEASURED, range(1, 17))
    p = break_even_timeout_policy(table)
    assert p.timeout_for(L.L2, L.L0, 5) == pytest.approx(109.07, abs=0.01)
    assert p.timeout_for(L.L1, L.L0, 1) == pytest.approx(1017.97, abs=0.01)
    with pytest.raises(ConfigError):
        p.timeout_for(L.L2, L.L0, 17)


def test_break_even_timer_in_simulation(gold5):
    p = break_even_timeout_policy(break_even_table(GOLD6130, GOLD6130_MEASURED, [5]))
    r = simulate(tr((C.AVX512, 10.0), (C.SCALAR, 500.0)), p, gold5, record_timeline=True)
    assert timer_times(r) == [pytest.approx(region_start(r, 1) + 109.07319, abs=1e-6)]


def test_break_even_flat_zero_is_immediate():
    zero = TransitionCostTable(flat_us=0.0)
    cfg = SimConfig(GOLD6130, zero, 5)
    p = BreakEvenTimeout(break_even_table(GOLD6130, zero, [5]))
    trace = tr((C.AVX512, 10.0), (C.SCALAR, 500.0))
    assert simulate(trace, p, cfg).total_wall_us == pytest.approx(simulate(trace, Immediate(), cfg).total_wall_us)


def test_hint_upclocks_at_gap_start(i9_wall):
    trace = tr((C.AVX512, 10.0), (C.SCALAR, 700.0, True))
    r = simulate(trace, hint_directed_policy(670), i9_wall, record_timeline=True)
    assert r.hints_taken == 1
    up = [e for e in r.timeline if e[1] == "transition" and e[2] == 2]
    assert up[0][0] == pytest.approx(region_start(r, 1))
    assert timer_times(r) == []


def test_hint_without_hints_equals_fixed(i9_wall):
    trace = tr((C.AVX512, 10.0), (C.SCALAR, 700.0), (C.AVX512, 10.0), (C.SCALAR, 100.0))
    a = simulate(trace, hint_directed_policy(670), i9_wall).to_dict()
    b = simulate(trace, fixed_timeout_policy(670), i9_wall).to_dict()
    a.pop("policy"), b.pop("policy")
    assert a == b


def test_hint_at_required_level_holds(i9_wall):
    r = simulate(tr((C.SCALAR, 100.0, True), (C.SCALAR, 50.0, True)), hint_directed_policy(670), i9_wall)
    assert r.transitions == {}
    assert r.hints_taken == 0
    assert HintDirected(670).decide(PolicyEvent(EventKind.HINT, L.L0, L.L0, 1, 3.1)).kind.value == "hold"


@pytest.fixture
def i9_table():
    from avxdvfs.model import FLAT16, I9_7940X
    return break_even_table(I9_7940X, FLAT16, [1])


def test_oracle_threshold(i9_wall, i9_table):
    g = break_even_lookup(i9_table)[(2, 0, 1)].gap_threshold_us
    assert g == pytest.approx(32 * 2.4 / 0.7)
    above = simulate(tr((C.AVX512, 10.0), (C.SCALAR, g + 1)), oracle_policy(i9_table), i9_wall)
    below = simulate(tr((C.AVX512, 10.0), (C.SCALAR, g - 1)), oracle_policy(i9_table), i9_wall)
    assert above.transitions == {(0, 2): 1, (2, 0): 1}
    assert below.transitions == {(0, 2): 1}


def test_oracle_uses_target_frequency_for_l1():
    cfg = SimConfig(GOLD6130, GOLD6130_MEASURED, 9)
    table = break_even_table(GOLD6130, GOLD6130_MEASURED, [9])
    e = break_even_lookup(table)[(2, 1, 9)]
    # gap length in L0-reference time that equals the threshold at the L1 frequency
    g_ref = e.gap_threshold_us * e.f_high_ghz / cfg.f_ref
    up = simulate(tr((C.AVX512, 10.0), (C.AVX2, g_ref * 1.01)), Oracle(table), cfg)
    hold = simulate(tr((C.AVX512, 10.0), (C.AVX2, g_ref * 0.99)), Oracle(table), cfg)
    assert (2, 1) in up.transitions
    assert (2, 1) not in hold.transitions


def test_oracle_needs_clairvoyance(i9_table):
    with pytest.raises(ContractViolation):
        Oracle(i9_table).decide(PolicyEvent(EventKind.REGION_END, L.L2, L.L0, 1, 3.1))


def test_oracle_dominates_on_random_gaps(i9_wall, i9_table):
    rng = np.random.default_rng(11)
    others = [FixedTimeout(670), FixedTimeout(180), FixedTimeout(0), Never(),
              HintDirected(670), BreakEvenTimeout(i9_table)]
    oracle = Oracle(i9_table)
    for gap in rng.uniform(1, 3000, 1000):
        trace = tr((C.AVX512, 20.0), (C.SCALAR, float(gap), True), (C.AVX512, 20.0))
        best = simulate(trace, oracle, i9_wall).total_wall_us
        for p in others:
            assert best <= simulate(trace, p, i9_wall).total_wall_us + 1e-9


@pytest.mark.parametrize("spec,cls", [
    ("fixed:670", FixedTimeout), ("fixed:0.5", FixedTimeout), ("hint:670", HintDirected),
    ("breakeven", BreakEvenTimeout), ("fixed:breakeven", BreakEvenTimeout), ("oracle", Oracle),
    ("never", Never), ("immediate", Immediate), ("intel-documented", FixedTimeout),
])
def test_parse_policy(spec, cls):
    p = parse_policy(spec, GOLD6130, GOLD6130_MEASURED, 3)
    assert isinstance(p, cls)
    assert p.name == spec


def test_parse_policy_documented_alias():
    assert parse_policy("intel-documented", GOLD6130, GOLD6130_MEASURED, 1).timeout_us == 2000


@pytest.mark.parametrize("spec", ["fixed", "fixed:abc", "hint:-1", "magic", "fixed:"])
def test_parse_policy_errors(spec):
    with pytest.raises(ConfigError):
        parse_policy(spec, GOLD6130, GOLD6130_MEASURED, 1)


# --- competitive analysis ----------------------------------------------------

def test_ratio_two_just_above_threshold(gold5):
    table = break_even_table(GOLD6130, GOLD6130_MEASURED, [5])
    e = break_even_lookup(table)[(2, 0, 5)]
    res = competitive_sweep(FixedTimeout(e.t_be_us), (2, 0), gold5, [e.gap_threshold_us + 0.01])
    assert res.max_ratio == pytest.approx(2.0, abs=1e-3)


def test_ratio_one_for_short_gaps(gold5):
    table = break_even_table(GOLD6130, GOLD6130_MEASURED, [5])
    res = competitive_sweep(BreakEvenTimeout(table), (2, 0), gold5, [1.0, 5.0, 20.0])
    assert res.ratio == pytest.approx([1.0, 1.0, 1.0])


def test_simulated_oracle_matches_closed_form(gold5):
    table = break_even_table(GOLD6130, GOLD6130_MEASURED, [5])
    for pair in [(1, 0), (2, 0), (2, 1)]:
        for gap in np.linspace(1, 1500, 60):
            p = policy_cost(Oracle(table), gap, pair, gold5)
            assert p == pytest.approx(oracle_cost(gap, pair, gold5), abs=1e-9)


def test_fixed_670_not_two_competitive(gold5):
    res = competitive_sweep(FixedTimeout(670), (2, 0), gold5, parse_range("1:3000:5"))
    assert res.max_ratio > 2.0


def test_sweep_errors(gold5):
    with pytest.raises(ConfigError):
        competitive_sweep(Never(), (2, 0), gold5, [])
    with pytest.raises(ConfigError):
        competitive_sweep(Never(), (0, 2), gold5, [10.0])
    with pytest.raises(ConfigError):
        competitive_sweep(Never(), (2, 0), gold5, [0.0])


def test_parse_range():
    assert parse_range("1:5:1") == [1, 2, 3, 4, 5]
    assert parse_range("0.5:1.5:0.5") == [0.5, 1.0, 1.5]
    for bad in ("1:5", "5:1:1", "1:5:0", "a:b:c"):
        with pytest.raises(ConfigError):
            parse_range(bad)
