#!/usr/bin/env python3
"""Runtime of the synthetic web trace as a function of the upclock timeout.

Writes one CSV row per timeout for the plain fixed policy and the hint-directed
variant, plus the clairvoyant and never-upclock reference lines.
"""

import argparse
import csv
import sys

import numpy as np

from avxdvfs.model import break_even_table, load_cost_table, load_freq_table
from avxdvfs.policies import FixedTimeout, HintDirected, Never, Oracle
from avxdvfs.simengine import SimConfig, TimeoutMode, simulate
from avxdvfs.trace import WebTraceConfig, gen_web_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--requests", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--freq", default="i9-7940X")
    ap.add_argument("--costs", default="flat16")
    ap.add_argument("--mode", choices=[m.value for m in TimeoutMode], default="wallclock")
    ap.add_argument("--max-timeout", type=float, default=2000.0)
    ap.add_argument("--step", type=float, default=20.0)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    cfg = SimConfig(load_freq_table(args.freq), load_cost_table(args.costs), 1,
                    timeout_mode=TimeoutMode(args.mode))
    trace = gen_web_trace(WebTraceConfig(n_requests=args.requests, seed=args.seed))
    oracle = simulate(trace, Oracle(break_even_table(cfg.freq, cfg.costs, [1])), cfg).total_wall_us
    never = simulate(trace, Never(), cfg).total_wall_us

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timeout_us", "fixed_wall_us", "hint_wall_us", "oracle_wall_us", "never_wall_us"])
    for tau in np.arange(0.0, args.max_timeout + args.step / 2, args.step):
        fixed = simulate(trace, FixedTimeout(tau), cfg).total_wall_us
        hint = simulate(trace, HintDirected(tau), cfg).total_wall_us
        w.writerow([f"{tau:g}", f"{fixed:.3f}", f"{hint:.3f}", f"{oracle:.3f}", f"{never:.3f}"])
    if args.output:
        out.close()


if __name__ == "__main__":
    main()
