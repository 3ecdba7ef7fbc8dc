"""Stochastic graph augmentation: relaxed Bernoulli edge sampling.

Each candidate pair (entries of the edge-probability matrix above zero,
taken once with u < v) is sampled through the binary Gumbel-softmax: the
difference of two Gumbel draws added to the pair's log-odds, squashed by a
temperature-scaled sigmoid. "relaxed" keeps the soft samples, "hard"
thresholds them, "straight-through" is hard on the forward pass with the
soft gradient underneath.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .rng import gumbel_noise
from .tensor import Tensor

__all__ = ["AugmentedGraph", "sample_augmented", "deterministic_augmented",
           "original_augmented", "augmentation_bce"]

_PROB_EPS = 1e-6
MODES = ("relaxed", "hard", "straight-through")


@dataclass
class AugmentedGraph:
    """One sampled augmentation over the candidate pair support (u < v)."""

    n: int
    rows: np.ndarray      # (E,) int64, rows[e] < cols[e]
    cols: np.ndarray
    logits: Tensor        # (E,) leaf; log-odds of each pair's probability
    soft: Tensor          # (E,) relaxed samples in (0, 1)
    hard: np.ndarray      # (E,) float64 in {0, 1}
    values: Tensor        # (E,) what downstream consumers multiply by
    tau: float
    mode: str

    def hard_edges(self) -> np.ndarray:
        """(m', 2) edge list of pairs whose hard sample is 1."""
        keep = self.hard > 0.5
        return np.stack([self.rows[keep], self.cols[keep]], axis=1)

    def adjacency_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        a[self.rows, self.cols] = self.hard
        a[self.cols, self.rows] = self.hard
        return a

    def dense_values(self) -> Tensor:
        """Symmetric (n, n) value matrix with ones on the diagonal.

        Gradients flow back into the per-pair samples; the diagonal and the
        off-support entries are constants.
        """
        diag = np.arange(self.n)
        rows = np.concatenate([self.rows, self.cols, diag])
        cols = np.concatenate([self.cols, self.rows, diag])
        vals = T.concat([self.values, self.values,
                         Tensor(np.ones(self.n))], axis=0)
        return T.scatter_pairs(vals, rows, cols, (self.n, self.n))


def _support_pairs(a_tilde: np.ndarray):
    upper = np.triu(a_tilde, k=1)
    rows, cols = np.nonzero(upper > 0.0)
    return rows.astype(np.int64), cols.astype(np.int64)


def sample_augmented(a_tilde: np.ndarray, *, tau: float, seed: int,
                     mode: str = "straight-through") -> AugmentedGraph:
    """Draw one augmentation from the edge-probability matrix."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    n = a_tilde.shape[0]
    rows, cols = _support_pairs(a_tilde)
    probs = np.clip(a_tilde[rows, cols], _PROB_EPS, 1.0 - _PROB_EPS)
    logits = Tensor(np.log(probs) - np.log1p(-probs), requires_grad=True)

    g1 = gumbel_noise((rows.size,), seed, "g1")
    g2 = gumbel_noise((rows.size,), seed, "g2")
    noise = Tensor((g1 - g2) / tau)
    soft = T.sigmoid(logits * (1.0 / tau) + noise)
    hard = (soft.data > 0.5).astype(np.float64)

    if mode == "relaxed":
        values = soft
    elif mode == "hard":
        values = Tensor(hard)
    else:
        values = T.straight_through(soft)
    return AugmentedGraph(n=n, rows=rows, cols=cols, logits=logits, soft=soft,
                          hard=hard, values=values, tau=tau, mode=mode)


def deterministic_augmented(a_tilde: np.ndarray) -> AugmentedGraph:
    """Noise-free augmentation: keep exactly the pairs with probability > 1/2.

    Used at embedding and evaluation time so outputs do not depend on a
    sampling seed. Kept pairs get value 1; nothing is differentiable.
    """
    n = a_tilde.shape[0]
    rows, cols = _support_pairs(a_tilde)
    probs = np.clip(a_tilde[rows, cols], _PROB_EPS, 1.0 - _PROB_EPS)
    logits = Tensor(np.log(probs) - np.log1p(-probs))
    hard = (a_tilde[rows, cols] > 0.5).astype(np.float64)
    values = Tensor(hard.copy())
    return AugmentedGraph(n=n, rows=rows, cols=cols, logits=logits,
                          soft=Tensor(hard.copy()), hard=hard, values=values,
                          tau=1.0, mode="deterministic")


def original_augmented(edges: np.ndarray, n: int) -> AugmentedGraph:
    """Identity augmentation: the input edge list kept verbatim, value 1.

    Used by the augmentation-off ablation, which trains on the unperturbed
    graph.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows, cols = edges[:, 0], edges[:, 1]
    ones = np.ones(rows.size, dtype=np.float64)
    return AugmentedGraph(n=n, rows=rows, cols=cols, logits=Tensor(ones * 0.0),
                          soft=Tensor(ones.copy()), hard=ones.copy(),
                          values=Tensor(ones.copy()), tau=1.0, mode="original")


def augmentation_bce(aug: AugmentedGraph, adjacency: np.ndarray) -> Tensor:
    """Summed binary cross-entropy of the soft samples against the original
    adjacency, over the candidate pair support."""
    targets = adjacency[aug.rows, aug.cols]
    return T.binary_cross_entropy(aug.soft, targets)
