"""Command-line front end.

Exit codes: 0 success, 2 input/config error, 3 policy contract violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .classifier import (
    ProcSpec,
    classification_report,
    classify,
    emit_sched_trace,
    parse_sched_trace,
    synth_sched_trace,
    timelines_csv,
)
from .competitive import competitive_sweep, parse_range
from .errors import ConfigError, ContractViolation, DomainError, TraceParseError
from .model import LicenseLevel, break_even_table, load_cost_table, load_freq_table
from .policies import parse_policy
from .simengine import SimConfig, TimeoutMode, compare_policies, simulate, single_gap_saving
from .trace import Dist, SegmentClass, WebTraceConfig, emit_trace, gen_web_trace, read_trace, trace_stats

EXIT_INPUT = 2
EXIT_CONTRACT = 3


class InputError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n"


def _table(rows: list[dict], columns: list[str]) -> str:
    def cell(v):
        return f"{v:.4f}" if isinstance(v, float) else str(v)

    body = [[cell(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(args, config: dict, rows: list[dict], columns: list[str], doc: dict | None = None) -> str:
    if getattr(args, "json", False):
        return _dumps({"config": config, **(doc if doc is not None else {"rows": rows})})
    if getattr(args, "csv", False):
        return _config_line(config) + _csv(rows, columns)
    return _config_line(config) + _table(rows, columns)


def _sim_config(args) -> SimConfig:
    freq = load_freq_table(args.freq)
    costs = load_cost_table(args.costs)
    return SimConfig(freq, costs, args.cores, timeout_mode=TimeoutMode(args.mode))


def _load_trace(path: str):
    try:
        return read_trace(path)
    except OSError as exc:
        raise InputError(f"cannot read trace {path}: {exc.strerror or exc}") from None


def _core_range(spec: str, max_cores: int) -> list[int]:
    if spec is None:
        return list(range(1, max_cores + 1))
    lo, _, hi = spec.partition(":")
    try:
        lo_i, hi_i = int(lo), int(hi or lo)
    except ValueError:
        raise ConfigError(f"malformed core range {spec!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise ConfigError(f"invalid core range {spec!r}")
    return list(range(lo_i, hi_i + 1))


# --- commands ----------------------------------------------------------------

def cmd_breakeven(args) -> int:
    freq = load_freq_table(args.freq)
    costs = load_cost_table(args.costs)
    cores = _core_range(args.cores, freq.max_cores)
    rows = [r.to_dict() for r in break_even_table(freq, costs, cores)]
    config = {"command": "breakeven", "freq": args.freq, "costs": args.costs, "cores": [cores[0], cores[-1]]}
    cols = ["from", "to", "cores", "f_high_ghz", "f_low_ghz", "t_o_us", "t_be_us", "gap_threshold_us"]
    _emit(args, _render(args, config, rows, cols))
    return 0


def _sim_config_dict(args, cfg: SimConfig) -> dict:
    return {"freq": args.freq, "costs": args.costs, "cores": cfg.active_cores, "mode": cfg.timeout_mode.value}


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    trace = _load_trace(args.trace)
    policy = parse_policy(args.policy, cfg.freq, cfg.costs, cfg.active_cores)
    report = simulate(trace, policy, cfg, record_timeline=args.timeline)
    config = {"command": "simulate", "trace": args.trace, "policy": args.policy, **_sim_config_dict(args, cfg)}
    row = {
        "name": report.policy_name,
        "wall_us": report.total_wall_us,
        "transitions": report.n_transitions,
        "overhead_us": report.transition_overhead_us,
        "hints_taken": report.hints_taken,
        **{f"res_L{k}_us": v for k, v in sorted(report.residency_us.items())},
    }
    cols = list(row)
    _emit(args, _render(args, config, [row], cols, {"report": report.to_dict()}))
    return 0


def cmd_compare(args) -> int:
    cfg = _sim_config(args)
    trace = _load_trace(args.trace)
    specs = [s for s in args.policies.split(",") if s.strip()]
    policies = [parse_policy(s, cfg.freq, cfg.costs, cfg.active_cores) for s in specs]
    baseline = args.baseline or specs[0]
    result = compare_policies(trace, policies, cfg, baseline.strip(), jobs=args.jobs)
    config = {"command": "compare", "trace": args.trace, "policies": specs, "baseline": baseline,
              **_sim_config_dict(args, cfg)}
    cols = ["name", "wall_us", "speedup", "transitions", "overhead_us"]
    _emit(args, _render(args, config, result.rows(), cols, result.to_dict()))
    return 0


def _parse_pair(spec: str):
    try:
        a, b = (LicenseLevel(int(x)) for x in spec.split(":"))
    except ValueError:
        raise ConfigError(f"malformed pair {spec!r}, expected e.g. 2:0") from None
    return a, b


def cmd_compete(args) -> int:
    cfg = _sim_config(args)
    pair = _parse_pair(args.pair)
    gaps = parse_range(args.gaps)
    policy = parse_policy(args.policy, cfg.freq, cfg.costs, cfg.active_cores)
    res = competitive_sweep(policy, pair, cfg, gaps)
    config = {"command": "compete", "policy": args.policy, "pair": args.pair, "gaps": args.gaps,
              **_sim_config_dict(args, cfg)}
    if args.json:
        _emit(args, _dumps({"config": config, **res.to_dict()}))
    elif args.csv:
        rows = [{"gap_us": g, "ratio": r, "policy_cost_us": p, "oracle_cost_us": o}
                for g, r, p, o in zip(res.gaps_us, res.ratio, res.policy_cost_us, res.oracle_cost_us)]
        _emit(args, _config_line(config) + _csv(rows, ["gap_us", "ratio", "policy_cost_us", "oracle_cost_us"]))
    else:
        rows = [{"policy": policy.name, "pair": args.pair, "cores": cfg.active_cores,
                 "max_ratio": res.max_ratio, "argmax_gap_us": res.argmax_gap}]
        _emit(args, _config_line(config) + _table(rows, list(rows[0])))
    return 0


def cmd_gap_saving(args) -> int:
    cfg = _sim_config(args)
    saving = single_gap_saving(args.gap, cfg, args.timeout)
    config = {"command": "gap-saving", "gap_us": args.gap, "timeout_us": args.timeout,
              **_sim_config_dict(args, cfg)}
    rows = [{"gap_us": args.gap, "timeout_us": args.timeout, "mode": cfg.timeout_mode.value, "saving_us": saving}]
    _emit(args, _render(args, config, rows, list(rows[0])))
    return 0


def cmd_gen_trace(args) -> int:
    cfg = WebTraceConfig(
        n_requests=args.requests,
        decrypt_us=Dist("lognormal", args.decrypt_mean, args.sigma),
        encrypt_us=Dist("lognormal", args.encrypt_mean, args.sigma),
        process_us=Dist("lognormal", args.process_mean, args.sigma),
        gap_us=Dist("exponential", args.gap_mean),
        seed=args.seed,
    )
    _emit(args, emit_trace(gen_web_trace(cfg)))
    return 0


def cmd_stats(args) -> int:
    st = trace_stats(_load_trace(args.trace), bin_us=args.bin)
    config = {"command": "stats", "trace": args.trace, "bin_us": args.bin}
    if args.json:
        _emit(args, _dumps({"config": config, "stats": st.to_dict()}))
        return 0
    rows = [{"class": k, "total_us": v} for k, v in st.per_class_us.items()]
    text = _config_line(config) + _table(rows, ["class", "total_us"])
    text += f"avx_fraction {st.avx_fraction:.6f}  segments {st.n_segments}  hints {st.n_hints}  gaps {len(st.gaps_us)}\n"
    _emit(args, text)
    return 0


def _parse_proc(spec: str) -> ProcSpec:
    pid, _, pattern = spec.partition("=")
    try:
        items = []
        for part in pattern.split(","):
            cls, _, dur = part.partition(":")
            items.append((SegmentClass(cls), float(dur)))
        return ProcSpec(int(pid), tuple(items))
    except ValueError:
        raise ConfigError(f"malformed process spec {spec!r}, expected PID=class:us[,class:us...]") from None


def cmd_gen_sched(args) -> int:
    cfg = _sim_config(args)
    specs = args.proc or ["1=avx512:100", "2=scalar:100"]
    procs = [_parse_proc(s) for s in specs]
    sched = synth_sched_trace(procs, args.slice, args.horizon, cfg, args.timeout, args.seed, args.jitter)
    _emit(args, emit_sched_trace(sched))
    return 0


def cmd_classify(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            sched = parse_sched_trace(fh)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    scores = classify(sched.events)
    config = {"command": "classify", "input": args.input}
    if args.json:
        _emit(args, _dumps({"config": config, "scores": classification_report(scores, sched.truth, args.timeline)}))
    elif args.csv:
        _emit(args, _config_line(config) + timelines_csv(scores))
    else:
        rows = [{"pid": pid, "score": s.score, "n_updates": s.n_updates, "n_bursts": s.n_bursts,
                 "truth": sched.truth.get(pid, "-")} for pid, s in sorted(scores.items())]
        _emit(args, _config_line(config) + _table(rows, ["pid", "score", "n_updates", "n_bursts", "truth"]))
    return 0


# --- argument parsing --------------------------------------------------------

def _add_format(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", help="emit JSON")
    g.add_argument("--csv", action="store_true", help="emit CSV")
    p.add_argument("-o", "--output", help="write to file instead of stdout")


def _add_sim(p, freq="i9-7940X", costs="flat16"):
    p.add_argument("--freq", default=freq, help="frequency preset name or JSON file (default %(default)s)")
    p.add_argument("--costs", default=costs, help="cost preset name or JSON file (default %(default)s)")
    p.add_argument("--cores", type=int, default=1, help="active cores (default %(default)s)")
    p.add_argument("--mode", choices=[m.value for m in TimeoutMode], default="wallclock",
                   help="timeout accounting (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="avxdvfs", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("breakeven", help="break-even table for all pairs and core counts")
    p.add_argument("--freq", default="gold6130")
    p.add_argument("--costs", default="gold6130-measured")
    p.add_argument("--cores", default=None, help="core range lo:hi (default: whole table)")
    _add_format(p)
    p.set_defaults(func=cmd_breakeven)

    p = sub.add_parser("simulate", help="simulate one policy on a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--policy", default="fixed:670")
    p.add_argument("--timeline", action="store_true", help="include the event timeline (JSON only)")
    _add_sim(p)
    _add_format(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare policies on a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--policies", default="fixed:670,fixed:180,hint:670,oracle")
    p.add_argument("--baseline", default=None, help="baseline policy spec (default: first)")
    p.add_argument("--jobs", type=int, default=1)
    _add_sim(p)
    _add_format(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("compete", help="competitive-ratio sweep over single gaps")
    p.add_argument("--policy", default="breakeven")
    p.add_argument("--pair", default="2:0", help="from:to license levels (default %(default)s)")
    p.add_argument("--gaps", default="1:5000:1", help="start:stop:step in reference us")
    _add_sim(p, freq="gold6130", costs="gold6130-measured")
    _add_format(p)
    p.set_defaults(func=cmd_compete)

    p = sub.add_parser("gap-saving", help="saving of one eager upclock versus a fixed timeout")
    p.add_argument("--gap", type=float, default=5000.0)
    p.add_argument("--timeout", type=float, default=670.0)
    _add_sim(p)
    _add_format(p)
    p.set_defaults(func=cmd_gap_saving)

    p = sub.add_parser("gen-trace", help="generate a synthetic trace")
    p.add_argument("kind", choices=["web"])
    p.add_argument("--requests", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--decrypt-mean", type=float, default=20.0)
    p.add_argument("--encrypt-mean", type=float, default=20.0)
    p.add_argument("--process-mean", type=float, default=500.0)
    p.add_argument("--gap-mean", type=float, default=300.0)
    p.add_argument("--sigma", type=float, default=0.5, help="log-sigma of lognormal phases")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("stats", help="summary statistics of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--bin", type=float, default=50.0)
    _add_format(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gen-sched", help="synthesize a multi-process scheduler trace")
    p.add_argument("--proc", action="append", help="PID=class:us[,class:us...] (repeatable)")
    p.add_argument("--slice", type=float, default=500.0)
    p.add_argument("--horizon", type=float, default=200_000.0)
    p.add_argument("--timeout", type=float, default=670.0, help="hardware upclock delay")
    p.add_argument("--jitter", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    _add_sim(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_sched)

    p = sub.add_parser("classify", help="power scores from a scheduler trace")
    p.add_argument("--input", required=True)
    p.add_argument("--timeline", action="store_true")
    _add_format(p)
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"error: contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InputError, ConfigError, TraceParseError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
