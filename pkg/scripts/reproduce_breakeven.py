#!/usr/bin/env python3
"""Break-even times for every (pair, core count) on the Xeon Gold 6130 presets, as CSV."""

import argparse
import csv
import sys

from avxdvfs.model import break_even_table, load_cost_table, load_freq_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--freq", default="gold6130")
    ap.add_argument("--costs", default="gold6130-measured")
    ap.add_argument("-o", "--output", help="CSV path (default stdout)")
    args = ap.parse_args()

    freq = load_freq_table(args.freq)
    table = break_even_table(freq, load_cost_table(args.costs), range(1, freq.max_cores + 1))
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["pair", "cores", "t_o_us", "t_be_us", "gap_threshold_us"])
    for e in table:
        w.writerow([f"L{int(e.from_level)}->L{int(e.to_level)}", e.active_cores,
                    f"{e.t_total_overhead_us:.5f}", f"{e.t_be_us:.3f}", f"{e.gap_threshold_us:.3f}"])
    if args.output:
        out.close()


if __name__ == "__main__":
    main()
