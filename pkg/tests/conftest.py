import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from treemimic import CountMatrix, to_proportions


@pytest.fixture
def small_counts() -> CountMatrix:
    return CountMatrix(
        ("alpha", "beta", "gamma"),
        ("c1", "c2", "c3", "c4"),
        np.array([[5, 3, 2, 0], [1, 1, 1, 1], [0, 0, 9, 1]]),
    )


@pytest.fixture
def small_props(small_counts):
    return to_proportions(small_counts)


def random_counts(rng: np.random.Generator, k: int, m: int, n_max: int = 50) -> CountMatrix:
    counts = rng.integers(0, n_max, size=(k, m))
    # keep N_k >= 1
    zero = counts.sum(axis=1) == 0
    counts[zero, 0] = 1
    labels = tuple(f"P{i}" for i in range(k))
    cats = tuple(f"c{j}" for j in range(m))
    return CountMatrix(labels, cats, counts)
