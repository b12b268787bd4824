import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weakcore.cli import make_line_instance, make_planar_blobs, make_random_metric


@pytest.fixture
def line_instance():
    """The canonical five-point line: positions 0,1,2,9,10, facilities at each."""
    return make_line_instance()


@pytest.fixture
def labeled_line_instance():
    """Same line with labels (0,0,0,1,1)."""
    return make_line_instance(m=2)


@pytest.fixture
def small_metric_instance():
    return make_random_metric(n=7, n_facilities=4, k=2, seed=13)


def random_small_instance(seed, n_max=10, f_max=6, k_max=2, m=1, z=1, euclidean=None):
    """A random desk-scale instance for oracle comparisons."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, n_max + 1))
    f = int(rng.integers(2, f_max + 1))
    k = int(rng.integers(1, min(k_max, f) + 1))
    use_euclid = bool(rng.integers(0, 2)) if euclidean is None else euclidean
    if use_euclid:
        inst = make_planar_blobs(n, f, k, z=z, m=m, seed=int(rng.integers(0, 2**31)))
    else:
        inst = make_random_metric(n, f, k, z=z, m=m, seed=int(rng.integers(0, 2**31)))
    if m > 1:
        # Shuffle labels so classes are not spatially aligned.
        labels = rng.integers(0, m, size=n)
        labels[: m] = np.arange(m)  # every label nonempty
        inst = type(inst)(
            inst.space, inst.points, inst.weights, inst.facilities, k, z, np.sort(labels)
        )
    return inst
