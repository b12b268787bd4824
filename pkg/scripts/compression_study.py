#!/usr/bin/env python3
"""How hard can the summary be squeezed before cost preservation breaks?

Sweeps the per-ring sample count on a fixed planar instance and reports the
summary size, the fraction of random (C, Gamma) trials whose cost ratio
stays inside (1 +/- 0.25), and the worst ratio seen.
"""

import argparse

from weakcore import SummaryParams, build_universal_weak_coreset, verify_property_B
from weakcore.cli import make_planar_blobs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--z", type=int, default=1, choices=(1, 2))
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    inst = make_planar_blobs(args.n, 25, args.k, z=args.z, seed=args.seed)
    print(f"n={args.n}, k={args.k}, z={args.z}, trials={args.trials}")
    print(f"{'samples/ring':>13} {'|S|':>5} {'pass rate':>10} {'worst ratio':>12}")
    for samples in (2, 4, 8, 12, 20, 40, 1_000_000):
        cs = build_universal_weak_coreset(
            inst, 0.2, 0.05, seed=args.seed,
            summary_params=SummaryParams(sample_count=samples, seed=args.seed),
        )
        rep = verify_property_B(inst, cs, trials=args.trials, eps=0.25, seed=args.seed)
        label = "all" if samples >= inst.n else str(samples)
        print(
            f"{label:>13} {cs.S.size:>5} {rep.pass_fraction:>10.3f} {rep.worst_ratio:>12.4f}"
        )


if __name__ == "__main__":
    main()
