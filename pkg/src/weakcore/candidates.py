"""Candidate-center set construction via adaptive power-distance sampling.

The metric-mode set J mixes uniform and D^z draws around an adaptive seed
and maps every sampled point to its nearest facility. The Euclidean k-means
mode instead emits means of small multisets drawn from a sampled base, as
synthetic center coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np
from numpy.random import SeedSequence, default_rng

from .model import ClusteringInstance, ValidationError


@dataclass(frozen=True)
class CandidateParams:
    """Tunables for candidate construction; None fields resolve to defaults."""

    eta: Optional[int] = None
    mix: float = 0.5
    seed: int = 0
    euclidean_subset_size: Optional[int] = None
    euclidean_base_size: Optional[int] = None
    max_euclidean_candidates: int = 2000

    def __post_init__(self):
        if not 0.0 <= self.mix <= 1.0:
            raise ValidationError("mix must lie in [0, 1]")
        if self.eta is not None and self.eta < 1:
            raise ValidationError("eta must be positive")


def default_eta(k: int, eps: float) -> int:
    return math.ceil((k / eps) ** 2 * math.log(2 + k / eps))


def default_subset_size(eps: float) -> int:
    return math.ceil(2.0 / eps)


def resolve_eta(params: CandidateParams, k: int, eps: float) -> int:
    eta = params.eta if params.eta is not None else default_eta(k, eps)
    return max(eta, k)


def _rng_from(seed) -> np.random.Generator:
    if isinstance(seed, SeedSequence):
        return default_rng(seed)
    return default_rng(SeedSequence(int(seed)))


def _nearest_facility_map(inst: ClusteringInstance) -> np.ndarray:
    """For every point, the lowest-index nearest facility (precomputed)."""
    d = inst.space.pairwise(inst.points, inst.facilities)
    order = np.argsort(inst.facilities, kind="stable")
    d_sorted = d[:, order]
    fac_sorted = inst.facilities[order]
    return fac_sorted[np.argmin(d_sorted, axis=1)]


def dz_seed(inst: ClusteringInstance, t: int, z: int, seed) -> np.ndarray:
    """Adaptive seeding: draw points with probability proportional to weight
    times current power distance, mapping each draw to a fresh nearest facility.

    Deterministic given the seed. After 100 duplicate redraws the
    farthest-point facility (max-min distance to the chosen set, ties to the
    lowest index) is taken instead.
    """
    if t > inst.facilities.size:
        raise ValidationError(f"cannot seed {t} centers from {inst.facilities.size} facilities")
    rng = _rng_from(seed)
    nf = _nearest_facility_map(inst)
    w = inst.weights
    chosen: list[int] = []
    chosen_set: set[int] = set()
    mind: Optional[np.ndarray] = None

    while len(chosen) < t:
        if mind is None:
            probs = w / w.sum()
        else:
            mass = w * mind
            total = mass.sum()
            probs = mass / total if total > 0 else w / w.sum()
        picked = None
        for _ in range(100):
            x_pos = int(rng.choice(inst.n, p=probs))
            f = int(nf[x_pos])
            if f not in chosen_set:
                picked = f
                break
        if picked is None:
            remaining = inst.facilities[~np.isin(inst.facilities, chosen)]
            if chosen:
                d = inst.space.pairwise(remaining, np.asarray(chosen, dtype=np.int64))
                far = d.min(axis=1)
                best = far.max()
                picked = int(remaining[far >= best].min())
            else:
                picked = int(remaining.min())
        chosen.append(picked)
        chosen_set.add(picked)
        mind_new = inst.space.pairwise(inst.points, [picked])[:, 0] ** z
        mind = mind_new if mind is None else np.minimum(mind, mind_new)
    return np.asarray(chosen, dtype=np.int64)


def _mixed_point_draws(
    inst: ClusteringInstance,
    count: int,
    mix: float,
    seed_centers: np.ndarray,
    z: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Positions of ``count`` points, each drawn uniformly-by-weight with
    probability ``mix`` and by weighted power distance otherwise."""
    w = inst.weights
    uniform_p = w / w.sum()
    mass = w * (inst.space.pairwise(inst.points, seed_centers).min(axis=1) ** z)
    total = mass.sum()
    dz_p = mass / total if total > 0 else uniform_p
    flips = rng.random(count) < mix
    n_uni = int(flips.sum())
    draws = np.empty(count, dtype=np.int64)
    draws[flips] = rng.choice(inst.n, size=n_uni, p=uniform_p)
    draws[~flips] = rng.choice(inst.n, size=count - n_uni, p=dz_p)
    return draws


def build_candidates_metric(
    inst: ClusteringInstance, eps: float, params: CandidateParams
) -> np.ndarray:
    """The candidate set J: seed facilities plus nearest facilities of eta
    sampled points. Sorted, deduplicated; |J| <= eta + k."""
    eta = resolve_eta(params, inst.k, eps)
    seed_centers = dz_seed(inst, inst.k, inst.z, SeedSequence(int(params.seed), spawn_key=(0,)))
    rng = default_rng(SeedSequence(int(params.seed), spawn_key=(1,)))
    draws = _mixed_point_draws(inst, eta, params.mix, seed_centers, inst.z, rng)
    nf = _nearest_facility_map(inst)
    j = np.union1d(seed_centers, nf[draws])
    assert j.size <= eta + inst.k
    return j


def _unrank_multiset(rank: int, n_items: int, size: int) -> list[int]:
    """rank -> the rank-th multiset (nondecreasing index tuple), lexicographic."""
    out = []
    lo = 0
    remaining = size
    r = rank
    while remaining > 0:
        for item in range(lo, n_items):
            block = math.comb(n_items - item + remaining - 2, remaining - 1)
            if r < block:
                out.append(item)
                lo = item
                remaining -= 1
                break
            r -= block
        else:
            raise ValueError("rank out of range")
    return out


def build_candidates_euclidean_means(
    inst: ClusteringInstance, eps: float, params: CandidateParams
) -> np.ndarray:
    """Candidate centers for Euclidean k-means: means of every multiset of a
    sampled base, as synthetic coordinates.

    The multiset count grows like (base + subset)^subset; above
    ``max_euclidean_candidates`` a uniform sample of multiset ranks is taken.
    """
    if not inst.space.is_euclidean:
        raise ValidationError("Euclidean candidate mode needs a Euclidean space")
    if inst.z != 2:
        raise ValidationError("Euclidean mean candidates apply to k-means (z=2) only")
    subset = params.euclidean_subset_size or default_subset_size(eps)
    base_size = params.euclidean_base_size or max(2 * subset, math.ceil(inst.k / eps))
    seed_centers = dz_seed(inst, inst.k, inst.z, SeedSequence(int(params.seed), spawn_key=(0,)))
    rng = default_rng(SeedSequence(int(params.seed), spawn_key=(2,)))
    base_pos = _mixed_point_draws(inst, base_size, params.mix, seed_centers, inst.z, rng)
    base = inst.space.coords[inst.points[base_pos]]

    count = math.comb(base_size + subset - 1, subset)
    cap = params.max_euclidean_candidates
    if count <= cap:
        tuples = combinations_with_replacement(range(base_size), subset)
        means = np.array([base[list(tup)].mean(axis=0) for tup in tuples])
    elif count < 2**62:
        ranks: set[int] = set()
        while len(ranks) < cap:
            need = cap - len(ranks)
            ranks.update(int(r) for r in rng.integers(0, count, size=need))
        means = np.array(
            [base[_unrank_multiset(r, base_size, subset)].mean(axis=0) for r in sorted(ranks)]
        )
    else:
        # Astronomically many multisets; sorted i.i.d. draws approximate uniformity.
        means = np.array(
            [base[np.sort(rng.integers(0, base_size, size=subset))].mean(axis=0) for _ in range(cap)]
        )
    return np.unique(means, axis=0)
