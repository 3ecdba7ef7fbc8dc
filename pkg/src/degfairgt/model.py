"""The encoder: input projection, stacked structural multi-head
self-attention blocks, and a linear feature decoder.

Attention runs over the sampled augmented graph plus mandatory self-loops.
Each pair score combines a content dot product (queries and keys built from
node states plus a projected neighborhood-overlap vector) with a learned
bias on the pair's degree weight. Per block: u = LayerNorm(h + attn),
h_next = W2 ReLU(W1 u), deliberately with no second residual around the
feed-forward map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .augment import AugmentedGraph
from .precompute import StructuralContext, pair_proximity
from .rng import generator
from .tensor import Tensor

__all__ = ["ModelConfig", "AttentionInputs", "build_attention_inputs", "DegFairGT"]


@dataclass(frozen=True)
class ModelConfig:
    d0: int
    layers: int = 4
    heads: int = 4
    hidden: int = 64
    dropout: float = 0.1
    khop: int = 2
    structural: bool = True  # False drops proximity/degree terms (plain attention)

    def __post_init__(self):
        if min(self.d0, self.layers, self.heads, self.hidden, self.khop) < 1:
            raise ValueError("all model dimensions must be positive")
        if self.hidden % self.heads:
            raise ValueError(
                f"hidden={self.hidden} not divisible by heads={self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


@dataclass
class AttentionInputs:
    """Per-sample attention support and its static pair observables.

    Directed pair list covers both orientations of every kept edge plus one
    self-loop per node. ``s_raw`` rows are the cumulative-neighborhood
    overlap vectors of the ORIGINAL graph (all-ones on self-loops);
    ``d_vals`` are degree weights (0 on self-loops and non-context pairs).
    """

    n: int
    src: np.ndarray     # (E,) int64
    dst: np.ndarray     # (E,) int64
    s_raw: np.ndarray   # (E, khop) float64
    d_vals: np.ndarray  # (E,) float64
    mask: np.ndarray    # (n, n) bool attention support
    values: Tensor      # (n, n) post-softmax multiplier (sampler gradients)


def build_attention_inputs(ctx: StructuralContext, aug: AugmentedGraph) -> AttentionInputs:
    n = aug.n
    kept = aug.hard_edges()
    u, v = kept[:, 0], kept[:, 1]
    diag = np.arange(n, dtype=np.int64)
    src = np.concatenate([u, v, diag])
    dst = np.concatenate([v, u, diag])

    prox = pair_proximity(ctx.khop, u, v)
    ones = np.ones((n, ctx.khop.k), dtype=np.float64)
    s_raw = np.concatenate([prox, prox, ones], axis=0)

    d_vals = ctx.d_matrix[src, dst]
    mask = np.zeros((n, n), dtype=bool)
    mask[src, dst] = True
    return AttentionInputs(n=n, src=src, dst=dst, s_raw=s_raw, d_vals=d_vals,
                           mask=mask, values=aug.dense_values())


class DegFairGT:
    """Structural graph transformer with a flat named-parameter table."""

    def __init__(self, config: ModelConfig, seed: int):
        self.config = config
        self.params: dict[str, Tensor] = {}
        c = config
        self._add("input.W0", (c.hidden, c.d0), seed, fan_in=c.d0)
        self._add("input.b0", (c.hidden,), seed, fan_in=c.d0)
        dk = c.head_dim
        for l in range(c.layers):
            pre = f"layer{l}."
            if c.structural:
                self._add(pre + "fs.W", (c.hidden, c.khop), seed, fan_in=c.khop)
                self._add(pre + "fs.b", (c.hidden,), seed, fan_in=c.khop)
                self._add(pre + "fd.w", (c.hidden,), seed, fan_in=1)
                self._add(pre + "fd.b", (c.hidden,), seed, fan_in=1)
            for k in range(c.heads):
                hp = f"{pre}head{k}."
                self._add(hp + "Wq_n", (dk, c.hidden), seed, fan_in=c.hidden)
                self._add(hp + "Wk_n", (dk, c.hidden), seed, fan_in=c.hidden)
                self._add(hp + "V", (dk, c.hidden), seed, fan_in=c.hidden)
                if c.structural:
                    self._add(hp + "Wq_s", (dk, c.hidden), seed, fan_in=c.hidden)
                    self._add(hp + "Wk_s", (dk, c.hidden), seed, fan_in=c.hidden)
                    self._add(hp + "phi", (c.hidden,), seed, fan_in=c.hidden)
            self._add(pre + "O", (c.hidden, c.hidden), seed, fan_in=c.hidden)
            self.params[pre + "ln.gain"] = Tensor(np.ones(c.hidden), requires_grad=True)
            self.params[pre + "ln.bias"] = Tensor(np.zeros(c.hidden), requires_grad=True)
            self._add(pre + "ffn.W1", (2 * c.hidden, c.hidden), seed, fan_in=c.hidden)
            self._add(pre + "ffn.W2", (c.hidden, 2 * c.hidden), seed, fan_in=2 * c.hidden)
        self._add("decoder.W", (c.d0, c.hidden), seed, fan_in=c.hidden)
        self._add("decoder.b", (c.d0,), seed, fan_in=c.hidden)

    def _add(self, name: str, shape, seed: int, *, fan_in: int):
        # Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded per tensor name
        # so values do not depend on creation order.
        bound = 1.0 / np.sqrt(fan_in)
        rng = generator(seed, "init", name)
        self.params[name] = Tensor(rng.uniform(-bound, bound, size=shape),
                                   requires_grad=True)

    def input_projection(self, features: np.ndarray) -> Tensor:
        x = Tensor(np.asarray(features, dtype=np.float64))
        return x @ self.params["input.W0"].T + self.params["input.b0"]

    def attention_scores(self, h: Tensor, inputs: AttentionInputs,
                         layer: int, head: int) -> Tensor:
        """Per-pair scores (E,) for one head, ordered like inputs.src/dst."""
        p = self.params
        pre, hp = f"layer{layer}.", f"layer{layer}.head{head}."
        dk = self.config.head_dim

        qn = T.gather_rows(h @ p[hp + "Wq_n"].T, inputs.src)
        kn = T.gather_rows(h @ p[hp + "Wk_n"].T, inputs.dst)
        if self.config.structural:
            s_proj = Tensor(inputs.s_raw) @ p[pre + "fs.W"].T + p[pre + "fs.b"]
            qn = qn + s_proj @ p[hp + "Wq_s"].T
            kn = kn + s_proj @ p[hp + "Wk_s"].T
        scores = (qn * kn).sum(axis=1) * (1.0 / np.sqrt(dk))
        if self.config.structural:
            fd_out = Tensor(inputs.d_vals[:, None]) * p[pre + "fd.w"] + p[pre + "fd.b"]
            scores = scores + (fd_out * p[hp + "phi"]).sum(axis=1)
        return scores

    def attention_aggregate(self, h: Tensor, inputs: AttentionInputs,
                            scores: list[Tensor], layer: int, *,
                            train: bool = False, rng=None) -> Tensor:
        """Softmax pair scores over each node's support, aggregate value
        vectors per head, concatenate, and project."""
        p = self.params
        n = inputs.n
        outs = []
        for head, score in enumerate(scores):
            dense = T.scatter_pairs(score, inputs.src, inputs.dst, (n, n))
            alpha = T.masked_row_softmax(dense, inputs.mask)
            alpha = T.dropout(alpha, self.config.dropout, train, rng)
            alpha = alpha * inputs.values
            vh = h @ p[f"layer{layer}.head{head}.V"].T
            outs.append(alpha @ vh)
        return T.concat(outs, axis=-1) @ p[f"layer{layer}.O"].T

    def ffn_block(self, h_in: Tensor, attn_out: Tensor, layer: int, *,
                  train: bool = False, rng=None) -> Tensor:
        p = self.params
        pre = f"layer{layer}."
        u = T.layer_norm(h_in + attn_out, p[pre + "ln.gain"], p[pre + "ln.bias"])
        hidden = T.relu(u @ p[pre + "ffn.W1"].T)
        hidden = T.dropout(hidden, self.config.dropout, train, rng)
        return hidden @ p[pre + "ffn.W2"].T

    def forward(self, features: np.ndarray, inputs: AttentionInputs, *,
                train: bool = False, rng=None) -> tuple[Tensor, Tensor]:
        """Returns (Z: n x d embeddings, X_hat: n x d0 reconstruction)."""
        h = self.input_projection(features)
        for l in range(self.config.layers):
            scores = [self.attention_scores(h, inputs, l, k)
                      for k in range(self.config.heads)]
            attn = self.attention_aggregate(h, inputs, scores, l,
                                            train=train, rng=rng)
            h = self.ffn_block(h, attn, l, train=train, rng=rng)
        x_hat = h @ self.params["decoder.W"].T + self.params["decoder.b"]
        return h, x_hat

    def embed(self, features: np.ndarray, inputs: AttentionInputs) -> np.ndarray:
        z, _ = self.forward(features, inputs, train=False)
        return z.data
