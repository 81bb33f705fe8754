#!/usr/bin/env python3
"""Power scores for single- and mixed-process scheduler scenarios."""

import argparse

from avxdvfs.classifier import ProcSpec, classify, synth_sched_trace
from avxdvfs.model import FLAT16, I9_7940X
from avxdvfs.simengine import SimConfig
from avxdvfs.trace import SegmentClass as C

SCENARIOS = {
    "scalar alone": [ProcSpec(1, [(C.SCALAR, 1000.0)])],
    "avx2 alone": [ProcSpec(1, [(C.AVX2, 1000.0)])],
    "avx512 alone": [ProcSpec(1, [(C.AVX512, 1000.0)])],
    "avx512 + scalar": [ProcSpec(1, [(C.AVX512, 100.0)]), ProcSpec(2, [(C.SCALAR, 100.0)])],
    "avx2 + scalar": [ProcSpec(1, [(C.AVX2, 100.0)]), ProcSpec(2, [(C.SCALAR, 100.0)])],
    "bursty avx512 + scalar": [ProcSpec(1, [(C.AVX512, 50.0), (C.SCALAR, 400.0)]),
                               ProcSpec(2, [(C.SCALAR, 100.0)])],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slices", default="500,1500", help="comma-separated slice lengths in us")
    ap.add_argument("--horizon", type=float, default=200000.0)
    ap.add_argument("--timeout", type=float, default=670.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = SimConfig(I9_7940X, FLAT16)
    print(f"{'scenario':<24} {'slice':>6} {'pid':>3} {'truth':>5} {'score':>7} {'updates':>7}")
    for slice_us in (float(x) for x in args.slices.split(",")):
        for name, procs in SCENARIOS.items():
            trace = synth_sched_trace(procs, slice_us, args.horizon, cfg, args.timeout, seed=args.seed)
            for pid, sc in sorted(classify(trace.events).items()):
                print(f"{name:<24} {slice_us:>6g} {pid:>3} {trace.truth[pid]:>5} {sc.score:>7.3f} {sc.n_updates:>7}")


if __name__ == "__main__":
    main()
