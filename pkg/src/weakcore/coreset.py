"""Weighted summaries via ring decomposition and their composition with the
candidate set into a universal weak coreset.

Each approximate cluster splits into an inner ring (cost at most the cluster
average) and geometrically growing bands. Small rings are taken whole;
large rings contribute a fixed number of weight-proportional draws, each
carrying ring weight / sample count, so ring weight is conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.random import SeedSequence, default_rng

from .candidates import (
    CandidateParams,
    build_candidates_euclidean_means,
    build_candidates_metric,
    dz_seed,
    resolve_eta,
)
from .model import ClusteringInstance, ValidationError, WeightedPoints


@dataclass(frozen=True, eq=False)
class Ring:
    """One distance-cost band of one cluster.

    ``band`` is in D^z cost units: level 0 covers [0, band_hi], level j >= 1
    covers (band_lo, band_hi].
    """

    cluster: int
    level: int
    indices: np.ndarray
    weight: float
    band: tuple[float, float]


@dataclass(frozen=True, eq=False)
class RingDecomposition:
    centers: np.ndarray
    rings: list[Ring]

    @property
    def ring_count(self) -> int:
        return len(self.rings)

    def rings_of(self, cluster: int) -> list[Ring]:
        return [r for r in self.rings if r.cluster == cluster]


@dataclass(frozen=True)
class SummaryParams:
    """Per-ring sampling controls.

    When ``sample_count`` is None the budget follows
    ceil(c0 * eps^(-2z) * (k ln|J| + ln(R / delta))) with R the realized ring
    count; an explicit value makes the budget independent of the data.
    """

    sample_count: Optional[int] = None
    c0: float = 4.0
    delta: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError("delta must lie in (0, 1)")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValidationError("sample_count must be positive")


def resolve_sample_count(
    params: SummaryParams, k: int, eps: float, z: int, j_size: int, ring_count: int
) -> int:
    if params.sample_count is not None:
        return params.sample_count
    j_size = max(j_size, 1)
    ring_count = max(ring_count, 1)
    raw = params.c0 * eps ** (-2 * z) * (k * math.log(j_size) + math.log(ring_count / params.delta))
    return max(1, math.ceil(raw))


def _points_view(source) -> WeightedPoints:
    if isinstance(source, ClusteringInstance):
        return source.weighted_points()
    return source


def ring_decomposition(source, centers, z: int) -> RingDecomposition:
    """Partition points around seed centers into geometric cost bands.

    Points go to their nearest center (ties to the lowest cluster index).
    With per-cluster average cost d_avg, level 0 holds costs <= d_avg and
    level j holds (2^(j-1) d_avg, 2^j d_avg]. A zero-average cluster is one
    [0, 0] ring.
    """
    B = _points_view(source)
    centers = np.asarray(centers, dtype=np.int64)
    d = B.space.pairwise(B.indices, centers) ** z
    nearest = np.argmin(d, axis=1)
    rings: list[Ring] = []
    for i in range(centers.size):
        mask = nearest == i
        if not mask.any():
            continue
        costs = d[mask, i]
        weights = B.weights[mask]
        members = np.flatnonzero(mask)
        avg = float(np.dot(weights, costs) / weights.sum())
        if avg <= 0.0:
            rings.append(
                Ring(i, 0, B.indices[members], float(math.fsum(weights.tolist())), (0.0, 0.0))
            )
            continue
        levels = np.zeros(costs.size, dtype=np.int64)
        above = costs > avg
        levels[above] = np.ceil(np.log2(costs[above] / avg)).astype(np.int64)
        # Guard against log rounding right at a band edge.
        levels[above] = np.maximum(levels[above], 1)
        for lvl in np.unique(levels):
            sel = levels == lvl
            band = (0.0, avg) if lvl == 0 else (2.0 ** (lvl - 1) * avg, 2.0**lvl * avg)
            rings.append(
                Ring(
                    i,
                    int(lvl),
                    B.indices[members[sel]],
                    float(math.fsum(weights[sel].tolist())),
                    band,
                )
            )
    return RingDecomposition(centers=centers, rings=rings)


@dataclass(frozen=True, eq=False)
class SummaryResult:
    indices: np.ndarray
    weights: np.ndarray
    sample_count: int
    ring_count: int
    seed_centers: np.ndarray


def _sample_ring(ring: Ring, B: WeightedPoints, s: int, rng: np.random.Generator):
    pos = {int(p): q for q, p in enumerate(B.indices)}
    members = ring.indices
    w = np.array([B.weights[pos[int(p)]] for p in members])
    if members.size <= s:
        return members, w
    draws = rng.choice(members.size, size=s, p=w / w.sum())
    picked, counts = np.unique(draws, return_counts=True)
    values = counts * (ring.weight / s)
    # Absorb float residual so the ring weight is conserved exactly.
    values[np.argmax(values)] += ring.weight - math.fsum(values.tolist())
    return members[picked], values


def build_summary(
    inst: ClusteringInstance,
    J,
    eps: float,
    params: SummaryParams,
    _label_tag: int = 0,
) -> SummaryResult:
    """The weighted summary S: per-ring weight-proportional sampling around
    an adaptive seed, take-all for small rings. Total weight is conserved."""
    j_size = J if isinstance(J, int) else len(J)
    if j_size < 1:
        raise ValidationError("candidate set J must be nonempty")
    seed_centers = dz_seed(
        inst, inst.k, inst.z, SeedSequence(int(params.seed), spawn_key=(0, _label_tag))
    )
    decomp = ring_decomposition(inst, seed_centers, inst.z)
    s = resolve_sample_count(params, inst.k, eps, inst.z, j_size, decomp.ring_count)
    B = inst.weighted_points()
    parts_idx = []
    parts_w = []
    for ring in decomp.rings:
        rng = default_rng(
            SeedSequence(int(params.seed), spawn_key=(1, _label_tag, ring.cluster, ring.level))
        )
        idx, w = _sample_ring(ring, B, s, rng)
        parts_idx.append(idx)
        parts_w.append(w)
    indices = np.concatenate(parts_idx)
    weights = np.concatenate(parts_w)
    order = np.argsort(indices, kind="stable")
    return SummaryResult(indices[order], weights[order], s, decomp.ring_count, seed_centers)


def build_summary_labeled(
    inst: ClusteringInstance, J, eps: float, params: SummaryParams
) -> SummaryResult:
    """Independent summaries per label class, unioned; labels survive on S."""
    if inst.labels is None:
        raise ValidationError("labeled summary requires instance labels")
    parts = []
    for j in range(inst.n_labels):
        mask = inst.labels == j
        if not mask.any():
            continue
        sub = ClusteringInstance(
            inst.space,
            inst.points[mask],
            inst.weights[mask],
            inst.facilities,
            inst.k,
            inst.z,
        )
        parts.append(build_summary(sub, J, eps, params, _label_tag=j + 1))
    indices = np.concatenate([p.indices for p in parts])
    weights = np.concatenate([p.weights for p in parts])
    order = np.argsort(indices, kind="stable")
    return SummaryResult(
        indices[order],
        weights[order],
        max(p.sample_count for p in parts),
        sum(p.ring_count for p in parts),
        parts[0].seed_centers,
    )


@dataclass(frozen=True, eq=False)
class WeakCoreset:
    """The compressed instance: candidate centers J plus weighted summary (S, v).

    Metric modes store facility indices in ``J``; the Euclidean k-means mode
    stores synthetic coordinates in ``J_coords`` instead.
    """

    S: np.ndarray
    v: np.ndarray
    alpha: float
    z: int
    epsilon: float
    delta: float
    seed: int
    mode: str
    J: Optional[np.ndarray] = None
    J_coords: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def j_size(self) -> int:
        return int(self.J.size) if self.J is not None else int(self.J_coords.shape[0])

    def summary_points(self, inst: ClusteringInstance) -> WeightedPoints:
        labels = None
        if inst.labels is not None:
            pos = {int(p): q for q, p in enumerate(inst.points)}
            labels = np.array([inst.labels[pos[int(p)]] for p in self.S], dtype=np.int64)
        return WeightedPoints(inst.space, self.S, self.v, labels)

    def center_view(self, inst: ClusteringInstance):
        """(space, candidate ids) to evaluate centers against; augments the
        space with synthetic coordinates in Euclidean mode."""
        if self.J is not None:
            return inst.space, self.J
        return inst.space.augmented_with(self.J_coords)


def universal_alpha(z: int, points_are_facilities: bool) -> float:
    base = 3.0 if z == 1 else 9.0
    if points_are_facilities:
        base = 2.0 if z == 1 else 4.0
    return base


def identity_weak_coreset(inst: ClusteringInstance) -> WeakCoreset:
    """The degenerate compression S=X, v=w, J=F; exact by construction."""
    return WeakCoreset(
        S=inst.points.copy(),
        v=inst.weights.copy(),
        alpha=universal_alpha(inst.z, inst.points_are_facilities()),
        z=inst.z,
        epsilon=0.0,
        delta=0.0,
        seed=0,
        mode="identity",
        J=np.sort(inst.facilities),
        info={"identity": True},
    )


def build_universal_weak_coreset(
    inst: ClusteringInstance,
    eps: float,
    delta: float,
    mode: str = "metric",
    seed: int = 0,
    candidate_params: Optional[CandidateParams] = None,
    summary_params: Optional[SummaryParams] = None,
) -> WeakCoreset:
    """Compose J and (S, v) into the full compression for one instance.

    ``mode`` is "metric" (alpha 3/9, improving to 2/4 when every point is
    also a facility) or "euclidean_kmeans" (alpha 1, z=2 only).
    """
    if mode not in ("metric", "euclidean_kmeans"):
        raise ValidationError(f"unknown coreset mode {mode!r}")
    cand_seed = int(SeedSequence(int(seed), spawn_key=(0,)).generate_state(1)[0])
    summ_seed = int(SeedSequence(int(seed), spawn_key=(1,)).generate_state(1)[0])
    cparams = candidate_params if candidate_params is not None else CandidateParams(seed=cand_seed)
    if candidate_params is None:
        cparams = replace(cparams, seed=cand_seed)
    sparams = summary_params if summary_params is not None else SummaryParams(
        seed=summ_seed, delta=delta
    )
    if summary_params is None:
        sparams = replace(sparams, seed=summ_seed, delta=delta)

    if mode == "metric":
        j_ids = build_candidates_metric(inst, eps, cparams)
        j_coords = None
        alpha = universal_alpha(inst.z, inst.points_are_facilities())
        j_size = int(j_ids.size)
    else:
        j_ids = None
        j_coords = build_candidates_euclidean_means(inst, eps, cparams)
        alpha = 1.0
        j_size = int(j_coords.shape[0])

    if inst.labels is not None:
        summary = build_summary_labeled(inst, j_size, eps, sparams)
    else:
        summary = build_summary(inst, j_size, eps, sparams)

    info = {
        "eta": resolve_eta(cparams, inst.k, eps),
        "mix": cparams.mix,
        "c0": sparams.c0,
        "ring_sample_count": summary.sample_count,
        "ring_count": summary.ring_count,
        "candidate_seed": cparams.seed,
        "summary_seed": sparams.seed,
    }
    return WeakCoreset(
        S=summary.indices,
        v=summary.weights,
        alpha=alpha,
        z=inst.z,
        epsilon=eps,
        delta=delta,
        seed=seed,
        mode=mode,
        J=j_ids,
        J_coords=j_coords,
        info=info,
    )
