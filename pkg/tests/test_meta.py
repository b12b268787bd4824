import numpy as np
import pytest

from conftest import random_small_instance
from weakcore.constraints import Balanced, FixedProfile, FractionBounds, Unconstrained
from weakcore.coreset import build_universal_weak_coreset, identity_weak_coreset
from weakcore.flowlp import Infeasible
from weakcore.meta import (
    count_center_tuples,
    enumerate_center_tuples,
    finalize_assignment,
    solve_constrained,
)
from weakcore.model import ValidationError
from weakcore.cli import make_planar_blobs
from weakcore.constraints import check_feasibility, voronoi_profile
from weakcore.oracle import brute_force_opt


def test_enumerate_unordered_distinct():
    tuples = list(enumerate_center_tuples(["a", "b", "c"], 2))
    assert tuples == [("a", "b"), ("a", "c"), ("b", "c")]


def test_enumerate_ordered():
    tuples = list(enumerate_center_tuples(["a", "b"], 2, ordered=True))
    assert tuples == [("a", "b"), ("b", "a")]


def test_enumerate_counts():
    assert count_center_tuples(5, 2, ordered=False, allow_repeats=False) == 10
    assert count_center_tuples(5, 2, ordered=True, allow_repeats=False) == 20
    assert count_center_tuples(5, 2, ordered=True, allow_repeats=True) == 25
    assert len(list(enumerate_center_tuples(range(5), 2, True, True))) == 25
    assert len(list(enumerate_center_tuples(range(5), 2, False, True))) == 15


def test_enumerate_k_too_large():
    with pytest.raises(ValidationError):
        list(enumerate_center_tuples(["a"], 2))


def test_solve_unconstrained_line(line_instance):
    cs = identity_weak_coreset(line_instance)
    res = solve_constrained(cs, line_instance, Unconstrained())
    assert res.cost_on_full == pytest.approx(3.0)
    assert res.cost_on_summary == pytest.approx(3.0)
    assert res.tuples_evaluated == 10


def test_solve_balanced_line(line_instance):
    cs = identity_weak_coreset(line_instance)
    spec = Balanced(np.array([2.0, 2.0]), np.array([3.0, 3.0]))
    res = solve_constrained(cs, line_instance, spec)
    assert res.cost_on_full == pytest.approx(3.0)


def test_solve_balanced_heterogeneous_ordered(line_instance):
    cs = identity_weak_coreset(line_instance)
    spec = Balanced(np.array([4.0, 1.0]), np.array([5.0, 5.0]))
    res = solve_constrained(cs, line_instance, spec)
    assert res.cost_on_full == pytest.approx(10.0)
    assert res.tuples_evaluated == 20  # ordered mode engaged automatically
    totals = res.assignment_on_full.cluster_totals(2)
    assert totals[0] >= 4.0 - 1e-9


def test_finalize_voronoi(line_instance):
    sigma, cost = finalize_assignment(line_instance, np.array([1, 4]), Unconstrained())
    assert cost == pytest.approx(3.0)
    B = line_instance.weighted_points()
    prof = voronoi_profile(B, np.array([1, 4]), 1)
    sigma2, cost2 = finalize_assignment(line_instance, np.array([1, 4]), FixedProfile(prof))
    assert cost2 == pytest.approx(cost)


def test_finalize_balanced(line_instance):
    spec = Balanced(np.array([2.0, 2.0]), np.array([3.0, 3.0]))
    sigma, cost = finalize_assignment(line_instance, np.array([1, 4]), spec)
    assert cost == pytest.approx(3.0)
    assert sorted(sigma.cluster_totals(2).tolist()) == [2.0, 3.0]


def test_solve_infeasible_propagates(line_instance):
    cs = identity_weak_coreset(line_instance)
    spec = Balanced(np.array([4.0, 4.0]), np.array([5.0, 5.0]))  # sum lower > W
    with pytest.raises(Infeasible):
        solve_constrained(cs, line_instance, spec)


def test_solve_z_mismatch(line_instance):
    cs = identity_weak_coreset(line_instance)
    with pytest.raises(ValidationError):
        solve_constrained(cs, line_instance.with_z(2), Unconstrained())


def test_workers_match_sequential():
    inst = make_planar_blobs(40, 8, 2, seed=19)
    cs = identity_weak_coreset(inst)
    spec = Balanced(np.full(2, 5.0), np.full(2, 40.0))
    seq = solve_constrained(cs, inst, spec, workers=1)
    par = solve_constrained(cs, inst, spec, workers=4)
    assert seq.centers == par.centers
    assert seq.cost_on_full == pytest.approx(par.cost_on_full)
    assert seq.tuples_evaluated == par.tuples_evaluated


def test_cost_target_stops_early(line_instance):
    cs = identity_weak_coreset(line_instance)
    res = solve_constrained(cs, line_instance, Unconstrained(), cost_target=1e9)
    assert res.cost_on_full <= 1e9
    # Any answer must still be feasible and exactly costed.
    assert res.tuples_evaluated >= 1


@pytest.mark.parametrize("seed", range(8))
def test_degenerate_compression_matches_brute_force(seed):
    inst = random_small_instance(seed, n_max=9, f_max=5, k_max=2)
    cs = identity_weak_coreset(inst)
    res = solve_constrained(cs, inst, Unconstrained())
    _, opt, _ = brute_force_opt(inst, Unconstrained())
    assert res.cost_on_full == pytest.approx(opt, abs=1e-7)
    assert res.cost_on_summary == pytest.approx(opt, abs=1e-7)


def test_meta_result_internally_consistent():
    inst = make_planar_blobs(60, 10, 2, m=2, seed=23)
    cs = identity_weak_coreset(inst)
    spec = FractionBounds(np.full(2, 0.1), np.full(2, 0.9))
    res = solve_constrained(cs, inst, spec)
    B = inst.weighted_points()
    assert check_feasibility(res.assignment_on_full, B, spec, k=2) == []
    from weakcore.constraints import assignment_cost

    assert assignment_cost(B, res.assignment_on_full, np.array(res.centers), 1) == pytest.approx(
        res.cost_on_full
    )


def test_solve_with_euclidean_synthetic_centers():
    inst = make_planar_blobs(50, 6, 2, z=2, seed=29)
    from weakcore.candidates import CandidateParams

    cs = build_universal_weak_coreset(
        inst, 0.5, 0.05, mode="euclidean_kmeans", seed=8,
        candidate_params=CandidateParams(
            euclidean_subset_size=2, euclidean_base_size=10, max_euclidean_candidates=300
        ),
    )
    assert cs.alpha == 1.0
    res = solve_constrained(cs, inst, Unconstrained())
    assert res.center_coords is not None and res.center_coords.shape == (2, 2)
    assert check_feasibility(res.assignment_on_full, inst.weighted_points(), Unconstrained()) == []
    # Synthetic means may beat any facility tuple, but not by pathological amounts.
    _, opt_f, _ = brute_force_opt(inst, Unconstrained())
    assert res.cost_on_full <= 3.0 * opt_f
    assert res.cost_on_full > 0


def test_property_b_implies_summary_bound():
    """Where the winning tuple's summary/full ratio is inside (1 +/- eps),
    the full cost is bounded by (1+eps)/(1-eps) times the summary cost."""
    inst = make_planar_blobs(150, 15, 3, seed=41)
    from weakcore.coreset import SummaryParams

    eps = 0.25
    cs = build_universal_weak_coreset(
        inst, 0.2, 0.05, seed=13, summary_params=SummaryParams(sample_count=12, seed=13)
    )
    res = solve_constrained(cs, inst, Unconstrained())
    ratio = res.cost_on_full / res.cost_on_summary
    if 1 - eps <= ratio <= 1 + eps:
        assert res.cost_on_full <= (1 + eps) / (1 - eps) * res.cost_on_summary + 1e-9
