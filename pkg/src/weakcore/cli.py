"""Command-line surface: JSON file formats, synthetic instance generators,
and the generate / coreset / solve / oracle / verify commands.

Exit codes: 0 success (or verification pass), 2 infeasible, 3 validation or
input error, 4 resource ceiling exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional

import numpy as np
from numpy.random import SeedSequence, default_rng

from .constraints import (
    Balanced,
    ConstraintSpec,
    FixedProfile,
    FractionBounds,
    Unconstrained,
    ldiversity_bounds,
)
from .coreset import SummaryParams, WeakCoreset, build_universal_weak_coreset
from .candidates import CandidateParams
from .flowlp import Infeasible, SolverLimit
from .meta import SolveResult, solve_constrained
from .model import ClusteringInstance, ClusterProfile, MetricSpace, ValidationError, validate_instance
from .oracle import brute_force_opt, verify_property_A, verify_property_B

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3
EXIT_CEILING = 4

MAX_INSTANCE_BYTES = 100 * 1024 * 1024


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(payload: dict, path: Optional[str]) -> str:
    text = json.dumps(_jsonify(payload), sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------


def instance_to_payload(inst: ClusteringInstance) -> dict:
    points = []
    for pos, idx in enumerate(inst.points.tolist()):
        entry: dict = {"weight": float(inst.weights[pos])}
        if inst.space.is_euclidean:
            entry["coords"] = inst.space.coords[idx].tolist()
        else:
            entry["index"] = idx
        if inst.labels is not None:
            entry["label"] = int(inst.labels[pos])
        points.append(entry)
    facilities = []
    point_index_of = {int(p): i for i, p in enumerate(inst.points.tolist())}
    for idx in inst.facilities.tolist():
        if idx in point_index_of:
            facilities.append({"point": point_index_of[idx]})
        elif inst.space.is_euclidean:
            facilities.append({"coords": inst.space.coords[idx].tolist()})
        else:
            facilities.append({"index": idx})
    payload = {
        "metric": "euclidean" if inst.space.is_euclidean else "explicit",
        "points": points,
        "facilities": facilities,
        "k": inst.k,
        "z": inst.z,
    }
    if inst.space.is_euclidean:
        payload["dim"] = int(inst.space.coords.shape[1])
    else:
        payload["distance_matrix"] = inst.space.matrix.ravel().tolist()
    return payload


def instance_from_payload(payload: dict, triangle_check: str = "sampled") -> ClusteringInstance:
    kind = payload.get("metric")
    raw_points = payload.get("points", [])
    raw_fac = payload.get("facilities", [])
    if not raw_points or not raw_fac:
        raise ValidationError("instance file needs nonempty points and facilities")
    weights = [float(p.get("weight", 1.0)) for p in raw_points]
    labels = None
    if any("label" in p for p in raw_points):
        labels = [int(p.get("label", 0)) for p in raw_points]

    if kind == "euclidean":
        coords = []
        point_ids = []
        for p in raw_points:
            if "coords" not in p:
                raise ValidationError("euclidean points need coords")
            point_ids.append(len(coords))
            coords.append([float(c) for c in p["coords"]])
        fac_ids = []
        for f in raw_fac:
            if "point" in f:
                ref = int(f["point"])
                if not 0 <= ref < len(point_ids):
                    raise ValidationError(f"facility references unknown point {ref}")
                fac_ids.append(point_ids[ref])
            elif "coords" in f:
                fac_ids.append(len(coords))
                coords.append([float(c) for c in f["coords"]])
            else:
                raise ValidationError("euclidean facilities need coords or a point reference")
        space = MetricSpace.euclidean(np.array(coords))
    elif kind == "explicit":
        matrix_flat = payload.get("distance_matrix")
        if matrix_flat is None:
            raise ValidationError("explicit instances need a distance_matrix")
        size = int(round(len(matrix_flat) ** 0.5))
        if size * size != len(matrix_flat):
            raise ValidationError("distance_matrix length is not a perfect square")
        space = MetricSpace.explicit(
            np.array(matrix_flat, dtype=np.float64).reshape(size, size),
            triangle_check=triangle_check,
        )
        point_ids = []
        for p in raw_points:
            if "index" not in p:
                raise ValidationError("explicit points need an index")
            point_ids.append(int(p["index"]))
        fac_ids = []
        for f in raw_fac:
            if "point" in f:
                fac_ids.append(point_ids[int(f["point"])])
            elif "index" in f:
                fac_ids.append(int(f["index"]))
            else:
                raise ValidationError("explicit facilities need an index or point reference")
    else:
        raise ValidationError(f"unknown metric kind {kind!r}")

    inst = ClusteringInstance(
        space=space,
        points=np.array(point_ids, dtype=np.int64),
        weights=np.array(weights),
        facilities=np.array(fac_ids, dtype=np.int64),
        k=int(payload.get("k", 1)),
        z=int(payload.get("z", 1)),
        labels=np.array(labels, dtype=np.int64) if labels is not None else None,
    )
    report = validate_instance(inst)
    if report:
        raise ValidationError("invalid instance: " + "; ".join(report))
    return inst


def load_instance(path: str, triangle_check: str = "sampled", z: Optional[int] = None):
    if os.path.getsize(path) > MAX_INSTANCE_BYTES:
        raise ValidationError(f"{path} exceeds the 100 MB instance-file cap")
    inst = instance_from_payload(load_json(path), triangle_check)
    if z is not None and z != inst.z:
        inst = inst.with_z(z)
    return inst


# ---------------------------------------------------------------------------
# Coreset files
# ---------------------------------------------------------------------------


def coreset_to_payload(cs: WeakCoreset) -> dict:
    payload = {
        "J": cs.J.tolist() if cs.J is not None else cs.J_coords.tolist(),
        "S": [
            {"point": int(p), "weight": float(w)} for p, w in zip(cs.S.tolist(), cs.v.tolist())
        ],
        "alpha": float(cs.alpha),
        "z": int(cs.z),
        "epsilon": float(cs.epsilon),
        "delta": float(cs.delta),
        "seed": int(cs.seed),
        "mode": cs.mode,
        "params": _jsonify(cs.info),
    }
    return payload


def coreset_from_payload(payload: dict) -> WeakCoreset:
    j_raw = payload["J"]
    if j_raw and isinstance(j_raw[0], list):
        j_ids, j_coords = None, np.array(j_raw, dtype=np.float64)
    else:
        j_ids, j_coords = np.array(j_raw, dtype=np.int64), None
    s = np.array([e["point"] for e in payload["S"]], dtype=np.int64)
    v = np.array([e["weight"] for e in payload["S"]], dtype=np.float64)
    return WeakCoreset(
        S=s,
        v=v,
        alpha=float(payload["alpha"]),
        z=int(payload["z"]),
        epsilon=float(payload["epsilon"]),
        delta=float(payload["delta"]),
        seed=int(payload["seed"]),
        mode=payload.get("mode", "metric"),
        J=j_ids,
        J_coords=j_coords,
        info=payload.get("params", {}),
    )


# ---------------------------------------------------------------------------
# Constraint files
# ---------------------------------------------------------------------------


def constraint_from_payload(payload: dict, inst: ClusteringInstance) -> ConstraintSpec:
    kind = payload.get("type")
    k = inst.k
    if kind == "unconstrained":
        return Unconstrained()
    if kind == "profile":
        gamma = payload.get("gamma")
        if gamma is None:
            raise ValidationError("profile constraint needs a gamma array")
        return FixedProfile(ClusterProfile(np.array(gamma, dtype=np.float64)))
    if kind == "balanced":
        lo = payload.get("l")
        hi = payload.get("u")
        if lo is None or hi is None:
            raise ValidationError("balanced constraint needs l and u arrays")
        hi = [np.inf if h is None else float(h) for h in hi]
        return Balanced(np.array(lo, dtype=np.float64), np.array(hi, dtype=np.float64))
    if kind == "fractions":
        alpha = payload.get("alpha")
        beta = payload.get("beta")
        if alpha is None or beta is None:
            raise ValidationError("fraction constraint needs alpha and beta")
        return FractionBounds(np.array(alpha, dtype=np.float64), np.array(beta, dtype=np.float64))
    if kind == "ldiversity":
        l = payload.get("l")
        if l is None:
            raise ValidationError("ldiversity constraint needs l")
        direction = payload.get("direction", "at_least")
        if direction not in ("at_least", "at_most"):
            raise ValidationError("ldiversity direction must be at_least or at_most")
        if inst.labels is None:
            raise ValidationError("ldiversity requires a labeled instance")
        return ldiversity_bounds(int(l), k, inst.n_labels, at_most=direction == "at_most")
    raise ValidationError(f"unknown constraint type {kind!r}")


def load_constraint(path: str, inst: ClusteringInstance) -> ConstraintSpec:
    return constraint_from_payload(load_json(path), inst)


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------


def make_line_instance(
    n: int = 5, k: int = 2, z: int = 1, m: int = 1, seed: int = 0
) -> ClusteringInstance:
    """Points on a line in two groups (three fifths near 0, the rest from 9);
    n=5 gives the canonical positions 0,1,2,9,10 with facilities at every point."""
    left = max(1, (3 * n + 4) // 5)
    right = n - left
    positions = list(range(left)) + [9 + i for i in range(right)]
    coords = np.array([[float(p)] for p in positions])
    labels = None
    if m > 1:
        labels = np.array([(i * m) // n for i in range(n)], dtype=np.int64)
    return ClusteringInstance(
        space=MetricSpace.euclidean(coords),
        points=np.arange(n, dtype=np.int64),
        weights=np.ones(n),
        facilities=np.arange(n, dtype=np.int64),
        k=k,
        z=z,
        labels=labels,
    )


def make_planar_blobs(
    n: int, n_facilities: int, k: int, z: int = 1, m: int = 1, seed: int = 0, spread: float = 1.0
) -> ClusteringInstance:
    """k Gaussian blobs in the plane; facilities drawn from the same mixture."""
    rng = default_rng(SeedSequence(int(seed)))
    blob_centers = rng.uniform(0.0, 10.0, size=(k, 2))
    assign = rng.integers(0, k, size=n)
    pts = blob_centers[assign] + rng.normal(0.0, spread, size=(n, 2))
    fassign = rng.integers(0, k, size=n_facilities)
    fac = blob_centers[fassign] + rng.normal(0.0, spread, size=(n_facilities, 2))
    coords = np.vstack([pts, fac])
    labels = np.array([i % m for i in range(n)], dtype=np.int64) if m > 1 else None
    return ClusteringInstance(
        space=MetricSpace.euclidean(coords),
        points=np.arange(n, dtype=np.int64),
        weights=np.ones(n),
        facilities=np.arange(n, n + n_facilities, dtype=np.int64),
        k=k,
        z=z,
        labels=labels,
    )


def make_random_metric(
    n: int, n_facilities: int, k: int, z: int = 1, m: int = 1, seed: int = 0
) -> ClusteringInstance:
    """Random symmetric matrix closed under shortest paths, so the triangle
    inequality holds exactly."""
    rng = default_rng(SeedSequence(int(seed)))
    size = n + n_facilities
    raw = rng.uniform(1.0, 10.0, size=(size, size))
    mat = np.triu(raw, 1)
    mat = mat + mat.T
    np.fill_diagonal(mat, 0.0)
    for mid in range(size):  # Floyd-Warshall closure
        mat = np.minimum(mat, mat[:, mid][:, None] + mat[mid, :][None, :])
    labels = np.array([i % m for i in range(n)], dtype=np.int64) if m > 1 else None
    return ClusteringInstance(
        space=MetricSpace.explicit(mat, triangle_check="off"),
        points=np.arange(n, dtype=np.int64),
        weights=np.ones(n),
        facilities=np.arange(n, size, dtype=np.int64),
        k=k,
        z=z,
        labels=labels,
    )


GENERATORS = {
    "line": make_line_instance,
    "planar-blobs": make_planar_blobs,
    "random-metric": make_random_metric,
}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.kind == "line":
        inst = make_line_instance(n=args.n, k=args.k, z=args.z or 1, m=args.m, seed=args.seed)
    elif args.kind == "planar-blobs":
        inst = make_planar_blobs(
            args.n, args.facilities, args.k, z=args.z or 1, m=args.m, seed=args.seed
        )
    else:
        inst = make_random_metric(
            args.n, args.facilities, args.k, z=args.z or 1, m=args.m, seed=args.seed
        )
    dump_json(instance_to_payload(inst), args.out)
    print(f"wrote {args.kind} instance: n={inst.n} |F|={inst.facilities.size} k={inst.k} -> {args.out}")
    return EXIT_OK


def cmd_coreset(args) -> int:
    inst = load_instance(args.instance, triangle_check=args.triangle_check, z=args.z)
    cparams = CandidateParams(
        eta=args.eta,
        mix=args.mix,
        seed=int(SeedSequence(args.seed, spawn_key=(0,)).generate_state(1)[0]),
        euclidean_subset_size=args.subset_size,
        euclidean_base_size=args.base_size,
        max_euclidean_candidates=args.max_candidates,
    )
    sparams = SummaryParams(
        sample_count=args.sample_count,
        c0=args.c0,
        delta=args.delta,
        seed=int(SeedSequence(args.seed, spawn_key=(1,)).generate_state(1)[0]),
    )
    started = time.perf_counter()
    cs = build_universal_weak_coreset(
        inst,
        args.epsilon,
        args.delta,
        mode=args.mode,
        seed=args.seed,
        candidate_params=cparams,
        summary_params=sparams,
    )
    elapsed = time.perf_counter() - started
    dump_json(coreset_to_payload(cs), args.out)
    print(
        f"|J|={cs.j_size} |S|={cs.S.size} alpha={cs.alpha:g} "
        f"built in {elapsed:.2f}s -> {args.out}"
    )
    return EXIT_OK


def solve_result_payload(res: SolveResult) -> dict:
    payload = {
        "centers": res.centers if res.center_coords is None else res.center_coords.tolist(),
        "cost_on_summary": res.cost_on_summary,
        "cost_on_full": res.cost_on_full,
        "realized_profile": res.realized_profile.values.tolist(),
        "tuples_evaluated": res.tuples_evaluated,
        "assignment": [
            {"point": p, "cluster": c, "mass": m} for p, c, m in res.assignment_on_full.entries()
        ],
    }
    return payload


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, triangle_check=args.triangle_check, z=args.z)
    cs = coreset_from_payload(load_json(args.coreset))
    spec = load_constraint(args.constraint, inst)
    ordered = None
    if args.ordered:
        ordered = True
    elif args.unordered:
        ordered = False
    res = solve_constrained(
        cs,
        inst,
        spec,
        ordered=ordered,
        allow_repeats=args.allow_repeats,
        workers=args.workers,
        cost_target=args.cost_target,
    )
    dump_json(solve_result_payload(res), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("point,cluster,mass\n")
            for p, c, m in res.assignment_on_full.entries():
                fh.write(f"{p},{c},{m!r}\n")
    centers = res.centers if res.center_coords is None else res.center_coords.tolist()
    print(f"{'centers':>18}: {centers}")
    print(f"{'cost on summary':>18}: {res.cost_on_summary:.9g}")
    print(f"{'cost on full':>18}: {res.cost_on_full:.9g}")
    print(f"{'tuples evaluated':>18}: {res.tuples_evaluated}")
    print(f"{'wall time':>18}: {res.wall_time:.3f}s")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance, triangle_check=args.triangle_check, z=args.z)
    spec = load_constraint(args.constraint, inst)
    centers, cost, sigma = brute_force_opt(inst, spec, max_solves=args.max_solves)
    payload = {
        "centers": list(centers),
        "cost": cost,
        "cluster_totals": sigma.cluster_totals(inst.k).tolist(),
        "assignment_entries": len(sigma),
    }
    dump_json(payload, args.out)
    print(f"optimal centers {list(centers)} with cost {cost:.9g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = load_instance(args.instance, triangle_check=args.triangle_check, z=args.z)
    cs = coreset_from_payload(load_json(args.coreset))
    payload = {}
    all_passed = True
    if args.which in ("B", "both"):
        rep = verify_property_B(
            inst, cs, trials=args.trials, eps=args.epsilon, seed=args.seed, threshold=args.threshold
        )
        payload["B"] = {
            "trials": rep.trials,
            "passes": rep.passes,
            "pass_fraction": rep.pass_fraction,
            "worst_ratio": rep.worst_ratio,
            "window": list(rep.window),
            "passed": rep.passed,
            "records": [
                {
                    "centers": list(r.centers),
                    "profile": r.profile,
                    "kind": r.profile_kind,
                    "cost_full": r.cost_full,
                    "cost_summary": r.cost_summary,
                    "ratio": r.ratio,
                }
                for r in rep.records
            ],
        }
        all_passed &= rep.passed
        print(
            f"property B: {rep.passes}/{rep.trials} ratios in "
            f"[{rep.window[0]:g}, {rep.window[1]:g}], worst {rep.worst_ratio:.4g} "
            f"-> {'PASS' if rep.passed else 'FAIL'}"
        )
    if args.which in ("A", "both"):
        rep = verify_property_A(inst, cs, max_solves=args.max_solves)
        payload["A"] = {
            "ratio": rep.worst_ratio,
            "bound": rep.threshold,
            "passed": rep.passed,
            "centers": list(rep.records[0].centers),
        }
        all_passed &= rep.passed
        print(
            f"property A: ratio {rep.worst_ratio:.4g} vs bound {rep.threshold:g} "
            f"-> {'PASS' if rep.passed else 'FAIL'}"
        )
    dump_json(payload, args.out)
    return EXIT_OK if all_passed else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master random seed")
    sub.add_argument("--workers", type=int, default=1, help="parallel workers where supported")
    sub.add_argument("--z", type=int, choices=(1, 2), default=None, help="override the power z")
    sub.add_argument(
        "--triangle-check",
        choices=("sampled", "full", "off"),
        default="sampled",
        help="triangle-inequality check for explicit matrices",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakcore",
        description="Universal weak coresets for constrained k-median / k-means.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance file")
    g.add_argument("--kind", choices=sorted(GENERATORS), required=True)
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--facilities", type=int, default=5)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--m", type=int, default=1, help="number of labels (1 = unlabeled)")
    g.add_argument("--out", required=True)
    _common(g)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("coreset", help="build a universal weak coreset")
    c.add_argument("--instance", required=True)
    c.add_argument("--epsilon", type=float, required=True)
    c.add_argument("--delta", type=float, default=0.05)
    c.add_argument("--mode", choices=("metric", "euclidean_kmeans"), default="metric")
    c.add_argument("--eta", type=int, default=None, help="candidate sample count")
    c.add_argument("--mix", type=float, default=0.5, help="uniform draw probability")
    c.add_argument("--c0", type=float, default=4.0, help="ring sample-count constant")
    c.add_argument("--sample-count", type=int, default=None, help="explicit per-ring samples")
    c.add_argument("--subset-size", type=int, default=None, help="Euclidean multiset size")
    c.add_argument("--base-size", type=int, default=None, help="Euclidean base sample size")
    c.add_argument("--max-candidates", type=int, default=2000)
    c.add_argument("--out", required=True)
    _common(c)
    c.set_defaults(func=cmd_coreset)

    s = sub.add_parser("solve", help="solve a constrained instance via a coreset")
    s.add_argument("--instance", required=True)
    s.add_argument("--coreset", required=True)
    s.add_argument("--constraint", required=True)
    s.add_argument("--ordered", action="store_true", help="force ordered tuple enumeration")
    s.add_argument("--unordered", action="store_true", help="force unordered enumeration")
    s.add_argument("--allow-repeats", action="store_true")
    s.add_argument("--cost-target", type=float, default=None)
    s.add_argument("--csv", default=None, help="also write the assignment as CSV")
    s.add_argument("--out", required=True)
    _common(s)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exact brute-force optimum")
    o.add_argument("--instance", required=True)
    o.add_argument("--constraint", required=True)
    o.add_argument("--max-solves", type=int, default=1_000_000)
    o.add_argument("--out", required=True)
    _common(o)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="statistical verification of coreset properties")
    v.add_argument("--instance", required=True)
    v.add_argument("--coreset", required=True)
    v.add_argument("--which", choices=("A", "B", "both"), default="B")
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--epsilon", type=float, default=0.25, help="reporting window half-width")
    v.add_argument("--threshold", type=float, default=0.95, help="required pass fraction")
    v.add_argument("--max-solves", type=int, default=1_000_000)
    v.add_argument("--out", required=True)
    _common(v)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverLimit as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return EXIT_CEILING
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
