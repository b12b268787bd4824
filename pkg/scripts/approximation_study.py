#!/usr/bin/env python3
"""Observed approximation ratios of coreset-driven solves vs brute force on
random balanced instances. The universality bound is 3+eps (k-median) or
9+eps (k-means); observed ratios typically sit near 1."""

import argparse

import numpy as np

from weakcore import Balanced, brute_force_opt, build_universal_weak_coreset, solve_constrained
from weakcore.cli import make_planar_blobs, make_random_metric


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--z", type=int, default=1, choices=(1, 2))
    ap.add_argument("--eps", type=float, default=0.25)
    args = ap.parse_args()

    ratios = []
    for seed in range(args.instances):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(6, 13))
        f = int(rng.integers(3, 9))
        maker = make_planar_blobs if seed % 2 else make_random_metric
        inst = maker(n, f, 2, z=args.z, seed=seed)
        W = inst.total_weight
        target = W * rng.dirichlet(np.ones(2))
        lower = target * rng.uniform(0.2, 0.8, size=2)
        upper = np.minimum(target + (W - target) * rng.uniform(0.2, 0.8, size=2), W)
        spec = Balanced(lower, upper)
        cs = build_universal_weak_coreset(inst, args.eps, 0.05, seed=seed)
        res = solve_constrained(cs, inst, spec)
        _, opt, _ = brute_force_opt(inst, spec)
        ratios.append(res.cost_on_full / opt if opt > 0 else 1.0)

    ratios = np.array(ratios)
    bound = (3 if args.z == 1 else 9) + args.eps
    print(f"{args.instances} instances, z={args.z}, bound {bound:g}")
    print(f"  mean ratio   {ratios.mean():.4f}")
    print(f"  median       {np.median(ratios):.4f}")
    print(f"  max          {ratios.max():.4f}")
    print(f"  within bound {(ratios <= bound).mean():.1%}")


if __name__ == "__main__":
    main()
