import os

# Pin BLAS pools before numpy loads: timing bounds and bitwise determinism
# in the acceptance tests assume single-threaded math.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest

import degfairgt as dg


def random_graph(n: int, p: float, seed: int, d0: int = 4, classes: int = 2):
    """Erdos-Renyi graph with random features and labels; never empty."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    if not edges:
        edges = [(0, 1 % n)] if n > 1 else []
    features = rng.normal(size=(n, d0))
    labels = rng.integers(0, classes, size=n)
    return dg.build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2),
                          features, labels)


@pytest.fixture
def path4():
    """Path graph 0-1-2-3 with simple features."""
    edges = np.array([[0, 1], [1, 2], [2, 3]])
    features = np.arange(8, dtype=np.float64).reshape(4, 2)
    return dg.build_graph(edges, features, np.array([0, 0, 1, 1]))


@pytest.fixture
def two_cliques():
    """Two disjoint 5-cliques: nodes 0-4 and 5-9."""
    edges = []
    for base in (0, 5):
        for i in range(5):
            for j in range(i + 1, 5):
                edges.append((base + i, base + j))
    rng = np.random.default_rng(0)
    features = np.concatenate([rng.normal(0.0, 0.1, size=(5, 3)),
                               rng.normal(5.0, 0.1, size=(5, 3))])
    labels = np.array([0] * 5 + [1] * 5)
    return dg.build_graph(np.array(edges), features, labels)
