"""Self-supervised pretraining: objective assembly and the epoch loop.

The objective couples structure preservation (embedding cosine-similarity
matrix regressed onto damped multi-step transition targets plus feature
reconstruction) with an augmentation regularizer (cross-entropy of the
relaxed edge samples against the original adjacency).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .augment import (augmentation_bce, deterministic_augmented,
                      original_augmented, sample_augmented)
from .graph import Graph
from .model import AttentionInputs, DegFairGT, ModelConfig, build_attention_inputs
from .optim import Adam
from .precompute import StructuralContext, build_structural_context
from .rng import derive_seed, generator
from .tensor import Tensor

__all__ = ["TrainConfig", "TrainingError", "PretrainResult",
           "loss_l1", "total_loss", "pretrain", "loss_history_csv"]


class TrainingError(RuntimeError):
    """Training diverged or produced a non-finite loss term."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    lr: float = 1e-4
    weight_decay: float = 1e-5
    alpha: float = 1.0
    beta1: float = 0.5
    beta2: float = 0.5
    xi: float = 0.8
    zeta: float = 0.2
    clusters: int = 5
    dropout: float = 0.1
    p_steps: int = 3
    khop: int = 2
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ValueError("lr must be positive and weight_decay nonnegative")
        if min(self.alpha, self.beta1, self.beta2) < 0:
            raise ValueError("alpha, beta1, beta2 must be nonnegative")
        if self.xi < 0 or self.zeta < 0 or self.xi + self.zeta > 1.0 + 1e-12:
            raise ValueError(
                f"need xi, zeta >= 0 and xi + zeta <= 1, got {self.xi}, {self.zeta}")
        if min(self.clusters, self.p_steps, self.khop) < 1:
            raise ValueError("clusters, p_steps, khop must be >= 1")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


def loss_l1(z: Tensor, x_hat: Tensor, g: Graph, ctx: StructuralContext,
            beta1: float, beta2: float) -> Tensor:
    """Structure-preservation loss.

    beta1 * sum_p ||M^(p) - Z*||_F^2 + beta2 * mean_i ||X_i - Xhat_i||_2,
    where Z* is the embedding cosine-similarity matrix (zero rows give
    similarity 0).
    """
    z_star = T.cosine_similarity_matrix(z)
    struct = T.frobenius_sq(Tensor(ctx.m_targets[0]) - z_star)
    for m_p in ctx.m_targets[1:]:
        struct = struct + T.frobenius_sq(Tensor(m_p) - z_star)
    feat = T.row_l2_norm(Tensor(g.features) - x_hat).mean()
    return struct * beta1 + feat * beta2


def total_loss(l1: Tensor, l2: Tensor, alpha: float) -> Tensor:
    return l1 + l2 * alpha


@dataclass
class PretrainResult:
    model: DegFairGT
    optimizer: Adam
    ctx: StructuralContext
    history: list[tuple[int, float, float, float]] = field(default_factory=list)


def _check_finite(value: float, term: str, epoch: int) -> None:
    if not np.isfinite(value):
        raise TrainingError(
            f"non-finite loss at epoch {epoch}: {term} = {value!r}")


def pretrain(g: Graph, cfg: TrainConfig, model_cfg: ModelConfig | None = None,
             *, augment: bool = True) -> PretrainResult:
    """Run the full pretraining loop; deterministic under a fixed seed.

    Structural quantities are computed once. Each epoch draws a fresh
    straight-through augmentation (seed derived from the master seed and
    the epoch index), runs the encoder, and takes one Adam step. With
    ``augment=False`` the model trains on the unperturbed graph and the
    augmentation loss term is dropped.
    """
    if model_cfg is None:
        model_cfg = ModelConfig(d0=g.features.shape[1], dropout=cfg.dropout,
                                khop=cfg.khop)
    if model_cfg.khop != cfg.khop:
        model_cfg = replace(model_cfg, khop=cfg.khop)

    ctx = build_structural_context(g, clusters=cfg.clusters, khop=cfg.khop,
                                   p_steps=cfg.p_steps, xi=cfg.xi,
                                   zeta=cfg.zeta, seed=cfg.seed)
    model = DegFairGT(model_cfg, seed=cfg.seed)
    opt = Adam(model.params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    adj = g.adjacency_dense()
    result = PretrainResult(model=model, optimizer=opt, ctx=ctx)

    for epoch in range(cfg.epochs):
        if augment:
            aug = sample_augmented(ctx.a_tilde, tau=cfg.tau,
                                   seed=derive_seed(cfg.seed, "aug", epoch))
        else:
            aug = original_augmented(g.edges, g.n)
        inputs = build_attention_inputs(ctx, aug)
        drop_rng = generator(cfg.seed, "drop", epoch)
        z, x_hat = model.forward(g.features, inputs, train=True, rng=drop_rng)

        l1 = loss_l1(z, x_hat, g, ctx, cfg.beta1, cfg.beta2)
        _check_finite(float(l1.data), "structure-preservation term l1", epoch)
        if augment:
            l2 = augmentation_bce(aug, adj)
            _check_finite(float(l2.data), "augmentation term l2", epoch)
        else:
            l2 = Tensor(0.0)
        loss = total_loss(l1, l2, cfg.alpha if augment else 0.0)
        _check_finite(float(loss.data), "total loss", epoch)

        T.backward(loss)
        opt.step()
        result.history.append(
            (epoch, float(l1.data), float(l2.data), float(loss.data)))
    return result


def loss_history_csv(history, path, *, config_hash: str | None = None) -> None:
    lines = []
    if config_hash is not None:
        lines.append(f"# config_hash={config_hash}")
    lines.append("epoch,l1,l2,total")
    for epoch, l1, l2, total in history:
        lines.append(f"{epoch},{l1!r},{l2!r},{total!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def eval_inputs(g: Graph, ctx: StructuralContext, *,
                augment: bool = True) -> AttentionInputs:
    """Noise-free attention inputs for embedding and evaluation."""
    if augment:
        aug = deterministic_augmented(ctx.a_tilde)
    else:
        aug = original_augmented(g.edges, g.n)
    return build_attention_inputs(ctx, aug)
