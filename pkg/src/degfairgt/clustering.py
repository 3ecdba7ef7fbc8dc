"""Seeded k-means (k-means++ init, Lloyd iterations) on raw feature rows."""

from __future__ import annotations

import numpy as np

from .rng import generator

__all__ = ["kmeans"]


def _squared_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances without forming n*k*d temporaries.
    xx = np.einsum("ij,ij->i", x, x)[:, None]
    cc = np.einsum("ij,ij->i", centers, centers)[None, :]
    d2 = xx + cc - 2.0 * (x @ centers.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _init_plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = _squared_distances(x, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All points coincide with chosen centers; any pick works.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, _squared_distances(x, centers[j:j + 1]).ravel())
    return centers


def _lloyd(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int):
    n = x.shape[0]
    centers = _init_plusplus(x, k, rng)
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _squared_distances(x, centers)
        new_assign = d2.argmin(axis=1).astype(np.int64)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            mask = assign == j
            if mask.any():
                centers[j] = x[mask].mean(axis=0)
            else:
                # Reseed dead center at the globally worst-fit point.
                worst = int(d2[np.arange(n), assign].argmax())
                centers[j] = x[worst]
                assign[worst] = j
    sse = float(_squared_distances(x, centers)[np.arange(n), assign].sum())
    return assign, centers, sse


def kmeans(x: np.ndarray, k: int, seed: int, max_iter: int = 100,
           restarts: int = 10):
    """Cluster rows of ``x`` into ``k`` groups.

    Returns (assignments (n,) int64, centers (k, d)). Each restart runs
    Lloyd updates from a fresh k-means++ init until the assignment vector
    stops changing or ``max_iter`` is hit; the restart with the lowest
    within-cluster squared error wins. Empty clusters are reseeded to the
    point farthest from its center.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")

    rng = generator(seed, "kmeans")
    best = None
    for _ in range(max(1, restarts)):
        assign, centers, sse = _lloyd(x, k, rng, max_iter)
        if best is None or sse < best[2]:
            best = (assign, centers, sse)
    return best[0], best[1]
