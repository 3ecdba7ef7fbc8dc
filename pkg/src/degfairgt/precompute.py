"""Structural quantities derived from the raw graph before training.

Everything here is plain numpy (no gradients): feature-space clustering,
context pairs, the degree-weighted context matrix, the edge-probability
matrix used by the augmenter, pairwise neighborhood-overlap vectors, and
the multi-step transition targets the encoder is trained to preserve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import kmeans
from .graph import Graph, KHopIndex, build_khop_index, transition_powers

__all__ = [
    "context_mask",
    "degree_weight_matrix",
    "compose_a_tilde",
    "proximity_vector",
    "pair_proximity",
    "transition_targets",
    "StructuralContext",
    "build_structural_context",
]


def context_mask(assignment: np.ndarray, khop: KHopIndex) -> np.ndarray:
    """Boolean (n, n) mask of context pairs: same cluster and within k hops.

    Symmetric with an all-False diagonal (reach already excludes self).
    """
    assignment = np.asarray(assignment)
    same_cluster = assignment[:, None] == assignment[None, :]
    return same_cluster & khop.reach


def degree_weight_matrix(g: Graph, mask: np.ndarray) -> np.ndarray:
    """D with D_ij = 1/sqrt(deg_i * deg_j) on context pairs, 0 elsewhere.

    Masked pairs are reachable, so both endpoint degrees are >= 1.
    """
    deg = g.degrees.astype(np.float64)
    inv_sqrt = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)
    d = inv_sqrt[:, None] * inv_sqrt[None, :]
    d[~mask] = 0.0
    return d


def compose_a_tilde(g: Graph, d_matrix: np.ndarray, xi: float, zeta: float) -> np.ndarray:
    """Edge-probability matrix xi*A + zeta*D; entries are Bernoulli params."""
    if xi < 0.0 or zeta < 0.0:
        raise ValueError(f"xi and zeta must be nonnegative, got xi={xi}, zeta={zeta}")
    if xi + zeta > 1.0 + 1e-12:
        raise ValueError(f"xi + zeta must not exceed 1, got {xi + zeta}")
    return xi * g.adjacency_dense() + zeta * d_matrix


def pair_proximity(khop: KHopIndex, rows: np.ndarray, cols: np.ndarray,
                   chunk: int = 4096) -> np.ndarray:
    """Neighborhood-overlap vectors for node pairs, shape (len(rows), k).

    Component l-1 is the Jaccard similarity of the cumulative l-hop
    neighborhoods of the two nodes (self excluded on both sides); an empty
    union gives 0.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.zeros((rows.size, khop.k), dtype=np.float64)
    for start in range(0, rows.size, chunk):
        sl = slice(start, min(start + chunk, rows.size))
        r, c = rows[sl], cols[sl]
        for l in range(khop.k):
            a = khop.within[l][r]
            b = khop.within[l][c]
            inter = np.count_nonzero(a & b, axis=1).astype(np.float64)
            union = np.count_nonzero(a | b, axis=1).astype(np.float64)
            out[sl, l] = np.divide(inter, union, out=np.zeros_like(inter),
                                   where=union > 0)
    return out


def proximity_vector(khop: KHopIndex, i: int, j: int) -> np.ndarray:
    """Overlap vector for a single pair; see pair_proximity."""
    return pair_proximity(khop, np.array([i]), np.array([j]))[0]


def transition_targets(g: Graph, p_steps: int) -> list[np.ndarray]:
    """M^(1..P): damped-log averages of transition-matrix powers.

    M^(p) = log(1 + n * mean(T^1..T^p)) / log(1 + n), entrywise in [0, 1].
    """
    powers = transition_powers(g, p_steps)
    n = float(g.n)
    targets = []
    running = np.zeros_like(powers[0])
    for p, t_p in enumerate(powers, start=1):
        running = running + t_p
        t_bar = running / p
        targets.append(np.log1p(n * t_bar) / np.log1p(n))
    return targets


@dataclass
class StructuralContext:
    """Everything pretraining needs that depends only on the input graph."""

    assignment: np.ndarray        # (n,) cluster id per node
    khop: KHopIndex
    ctx_mask: np.ndarray          # (n, n) bool context pairs
    d_matrix: np.ndarray          # (n, n) degree weights on context pairs
    a_tilde: np.ndarray           # (n, n) Bernoulli edge probabilities
    m_targets: list[np.ndarray]   # length P, each (n, n)


def build_structural_context(g: Graph, *, clusters: int, khop: int,
                             p_steps: int, xi: float, zeta: float,
                             seed: int) -> StructuralContext:
    assignment, _ = kmeans(g.features, clusters, seed)
    index = build_khop_index(g, khop)
    mask = context_mask(assignment, index)
    d = degree_weight_matrix(g, mask)
    a_tilde = compose_a_tilde(g, d, xi, zeta)
    targets = transition_targets(g, p_steps)
    return StructuralContext(assignment=assignment, khop=index, ctx_mask=mask,
                             d_matrix=d, a_tilde=a_tilde, m_targets=targets)
