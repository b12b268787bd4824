#!/usr/bin/env python3
"""End-to-end walkthrough on a small planar instance.

Builds a coreset, solves four constraint families through it, and compares
each answer against the brute-force optimum.
"""

import numpy as np

from weakcore import (
    Balanced,
    FractionBounds,
    Unconstrained,
    brute_force_opt,
    build_universal_weak_coreset,
    ldiversity_bounds,
    solve_constrained,
    voronoi_profile,
)
from weakcore.cli import make_planar_blobs
from weakcore.constraints import FixedProfile


def main():
    inst = make_planar_blobs(n=60, n_facilities=8, k=2, z=1, m=2, seed=1234)
    W = inst.total_weight
    cs = build_universal_weak_coreset(inst, eps=0.25, delta=0.05, seed=99)
    print(f"instance: n={inst.n}, |F|={inst.facilities.size}, k={inst.k}, labels=2")
    print(f"coreset:  |J|={cs.j_size}, |S|={cs.S.size}, alpha={cs.alpha:g}\n")

    gamma = voronoi_profile(inst.weighted_points(), inst.facilities[: inst.k], inst.z)
    specs = [
        ("unconstrained", Unconstrained()),
        ("balanced 40/60", Balanced(np.full(2, 0.4 * W / 2), np.full(2, 0.6 * W))),
        ("fixed profile", FixedProfile(gamma)),
        ("fractions [.2,.8]", FractionBounds(np.full(2, 0.2), np.full(2, 0.8))),
        ("2-diversity", ldiversity_bounds(2, inst.k, inst.n_labels, at_most=True)),
    ]
    print(f"{'constraint':>18} {'coreset cost':>14} {'brute force':>12} {'ratio':>7} {'tuples':>7}")
    for name, spec in specs:
        res = solve_constrained(cs, inst, spec)
        _, opt, _ = brute_force_opt(inst, spec)
        ratio = res.cost_on_full / opt if opt else 1.0
        print(
            f"{name:>18} {res.cost_on_full:>14.4f} {opt:>12.4f} "
            f"{ratio:>7.4f} {res.tuples_evaluated:>7}"
        )


if __name__ == "__main__":
    main()
