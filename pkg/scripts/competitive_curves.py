#!/usr/bin/env python3
"""Gap vs competitive ratio for the break-even timeout and the fixed 670 us timeout."""

import argparse
import csv
import sys

from avxdvfs.competitive import competitive_sweep, parse_range
from avxdvfs.model import break_even_lookup, break_even_table, load_cost_table, load_freq_table
from avxdvfs.policies import FixedTimeout
from avxdvfs.simengine import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cores", type=int, default=5)
    ap.add_argument("--pair", default="2:0")
    ap.add_argument("--gaps", default="1:2000:1")
    ap.add_argument("--freq", default="gold6130")
    ap.add_argument("--costs", default="gold6130-measured")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    pair = tuple(int(x) for x in args.pair.split(":"))
    freq, costs = load_freq_table(args.freq), load_cost_table(args.costs)
    cfg = SimConfig(freq, costs, args.cores)
    t_be = break_even_lookup(break_even_table(freq, costs, [args.cores]))[(*pair, args.cores)].t_be_us
    gaps = parse_range(args.gaps)
    be = competitive_sweep(FixedTimeout(t_be), pair, cfg, gaps)
    intel = competitive_sweep(FixedTimeout(670), pair, cfg, gaps)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["gap_us", "ratio_breakeven", "ratio_fixed670"])
    for g, a, b in zip(gaps, be.ratio, intel.ratio):
        w.writerow([f"{g:g}", f"{a:.6f}", f"{b:.6f}"])
    if args.output:
        out.close()
    print(f"t_BE={t_be:.2f}us  max ratio breakeven={be.max_ratio:.4f}  fixed:670={intel.max_ratio:.4f}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
