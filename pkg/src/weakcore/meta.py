"""Enumeration meta-solver: try every k-tuple of candidate centers against
the summary, keep the cheapest, then re-solve the winner on the full data."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .constraints import (
    ConstraintSpec,
    FractionBounds,
    check_feasibility,
    is_symmetric,
    optimal_feasible_cost,
)
from .coreset import WeakCoreset
from .flowlp import Infeasible, SolverError
from .model import Assignment, ClusteringInstance, ClusterProfile, ValidationError, WeightedPoints

_CHUNK = 256


def count_center_tuples(j_size: int, k: int, ordered: bool, allow_repeats: bool) -> int:
    if allow_repeats:
        return j_size**k if ordered else math.comb(j_size + k - 1, k)
    if k > j_size:
        raise ValidationError(f"cannot choose {k} distinct centers from {j_size} candidates")
    return math.perm(j_size, k) if ordered else math.comb(j_size, k)


def enumerate_center_tuples(
    candidates, k: int, ordered: bool = False, allow_repeats: bool = False
) -> Iterator[tuple]:
    """Deterministic lexicographic stream of k-tuples over the candidate list."""
    pool = list(candidates)
    if not allow_repeats and k > len(pool):
        raise ValidationError(f"cannot choose {k} distinct centers from {len(pool)} candidates")
    if ordered:
        gen = itertools.product(pool, repeat=k) if allow_repeats else itertools.permutations(pool, k)
    else:
        gen = (
            itertools.combinations_with_replacement(pool, k)
            if allow_repeats
            else itertools.combinations(pool, k)
        )
    return iter(gen)


@dataclass(frozen=True, eq=False)
class SolveResult:
    centers: tuple
    cost_on_summary: float
    cost_on_full: float
    assignment_on_full: Assignment
    realized_profile: ClusterProfile
    tuples_evaluated: int
    wall_time: float
    center_coords: Optional[np.ndarray] = None


def finalize_assignment(
    inst: ClusteringInstance, centers, spec: ConstraintSpec, z: Optional[int] = None
) -> tuple[Assignment, float]:
    """Exact optimal feasible assignment of the full instance to fixed centers."""
    z = inst.z if z is None else z
    cost, sigma, _ = optimal_feasible_cost(inst.weighted_points(), centers, spec, z)
    return sigma, cost


def _evaluate_chunk(chunk, B, spec, z):
    best = None
    for rank, tup in chunk:
        try:
            cost, _, _ = optimal_feasible_cost(B, np.asarray(tup, dtype=np.int64), spec, z)
        except Infeasible:
            continue
        if best is None or (cost, rank) < best[:2]:
            best = (cost, rank, tup)
    return best


def solve_constrained(
    coreset: WeakCoreset,
    inst: ClusteringInstance,
    spec: ConstraintSpec,
    z: Optional[int] = None,
    *,
    ordered: Optional[bool] = None,
    allow_repeats: bool = False,
    workers: int = 1,
    cost_target: Optional[float] = None,
) -> SolveResult:
    """Pick the cheapest feasible center tuple from J scored on (S, v), then
    re-solve it exactly on the full instance.

    Symmetric specs enumerate unordered combinations; per-cluster
    heterogeneous bounds force ordered tuples. Ties break to the earliest
    tuple in enumeration order, so full enumeration is deterministic for any
    worker count. ``cost_target`` stops enumeration early once the summary
    cost reaches it; how early depends on chunking, so with a target the
    answer (still feasible and exactly costed) may vary with ``workers``.
    """
    z = inst.z if z is None else z
    if coreset.z != z:
        raise ValidationError(f"coreset was built for z={coreset.z}, solve requested z={z}")
    if isinstance(spec, FractionBounds) and inst.labels is None:
        raise ValidationError("fraction-bound constraints require a labeled instance")
    if ordered is None:
        ordered = not is_symmetric(spec)

    start = time.perf_counter()
    space, candidate_ids = coreset.center_view(inst)
    summary = coreset.summary_points(inst)
    summary = WeightedPoints(space, summary.indices, summary.weights, summary.labels)

    tuples = enumerate_center_tuples(candidate_ids.tolist(), inst.k, ordered, allow_repeats)
    ranked = enumerate(tuples)
    best: Optional[tuple] = None
    evaluated = 0

    def chunks() -> Iterable[list]:
        while True:
            block = list(itertools.islice(ranked, _CHUNK))
            if not block:
                return
            yield block

    if workers <= 1:
        for block in chunks():
            evaluated += len(block)
            cand = _evaluate_chunk(block, summary, spec, z)
            if cand is not None and (best is None or cand[:2] < best[:2]):
                best = cand
            if cost_target is not None and best is not None and best[0] <= cost_target:
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for block_group in _grouped(chunks(), workers):
                evaluated += sum(len(b) for b in block_group)
                for cand in pool.map(lambda b: _evaluate_chunk(b, summary, spec, z), block_group):
                    if cand is not None and (best is None or cand[:2] < best[:2]):
                        best = cand
                if cost_target is not None and best is not None and best[0] <= cost_target:
                    break

    if best is None:
        raise Infeasible("no candidate tuple admits a feasible assignment on the summary")
    cost_summary, _, winning = best

    full = inst.weighted_points()
    cost_full, sigma, profile = optimal_feasible_cost(
        WeightedPoints(space, full.indices, full.weights, full.labels),
        np.asarray(winning, dtype=np.int64),
        spec,
        z,
    )
    violations = check_feasibility(sigma, full, spec, k=inst.k)
    if violations:
        raise SolverError("final assignment violates the constraint spec: " + violations[0])

    coords = None
    if coreset.J_coords is not None:
        base = inst.space.size
        coords = np.array([coreset.J_coords[c - base] for c in winning])
    return SolveResult(
        centers=tuple(int(c) for c in winning),
        cost_on_summary=float(cost_summary),
        cost_on_full=float(cost_full),
        assignment_on_full=sigma,
        realized_profile=profile,
        tuples_evaluated=evaluated,
        wall_time=time.perf_counter() - start,
        center_coords=coords,
    )


def _grouped(iterable: Iterable, size: int) -> Iterator[list]:
    it = iter(iterable)
    while True:
        group = list(itertools.islice(it, size))
        if not group:
            return
        yield group
