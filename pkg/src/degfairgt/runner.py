"""Implementations behind the CLI subcommands.

Every command reads one strict JSON config, writes deterministic artifacts
under the output directory, and stamps each artifact with the config hash.
Re-running a command with the same config and seed overwrites the same
bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, config_hash, serialize_config
from .evaluate import evaluate_embeddings
from .graph import Graph, load_graph
from .model import DegFairGT, ModelConfig
from .precompute import build_structural_context
from .synth import synth_sbm
from .train import eval_inputs, loss_history_csv, pretrain

__all__ = ["run_pretrain", "run_embed", "run_evaluate", "run_ablate", "run_synth"]

CHECKPOINT_NAME = "checkpoint.dfgt"
LOSS_NAME = "loss.csv"
EMBED_NAME = "embeddings.csv"
REPORT_NAME = "report.csv"

ABLATION_CELLS = (
    ("full", True, True),
    ("no_aug", False, True),
    ("no_att", True, False),
    ("no_aug_no_att", False, False),
)


def acquire_graph(cfg: RunConfig) -> Graph:
    if cfg.dataset is not None:
        return load_graph(cfg.dataset.edges, cfg.dataset.features,
                          cfg.dataset.labels)
    return synth_sbm(cfg.synthetic)


def model_config(cfg: RunConfig, d0: int, *, structural: bool = True) -> ModelConfig:
    return ModelConfig(d0=d0, layers=cfg.layers, heads=cfg.heads,
                       hidden=cfg.hidden, dropout=cfg.train.dropout,
                       khop=cfg.train.khop, structural=structural)


def _hash_record(chash: str) -> np.ndarray:
    return np.frombuffer(chash.encode("ascii"), dtype=np.uint8).astype(np.float64)


def _write_meta(out: Path, cfg: RunConfig, command: str, threads: int) -> None:
    meta = {"command": command, "config_hash": config_hash(cfg),
            "threads": threads, "seed": cfg.train.seed}
    (out / "run_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(serialize_config(cfg))


def _train_one(cfg: RunConfig, g: Graph, *, augment: bool, structural: bool,
               out: Path) -> DegFairGT:
    mc = model_config(cfg, g.features.shape[1], structural=structural)
    result = pretrain(g, cfg.train, mc, augment=augment)
    chash = config_hash(cfg)
    extra = {
        "dims": np.array([mc.d0, mc.layers, mc.heads, mc.hidden, mc.khop,
                          float(mc.structural), float(augment)]),
        "config": _hash_record(chash),
    }
    save_checkpoint(result.model, result.optimizer, out / CHECKPOINT_NAME,
                    extra=extra)
    loss_history_csv(result.history, out / LOSS_NAME, config_hash=chash)
    return result.model


def _restore_model(cfg: RunConfig, g: Graph, checkpoint: Path):
    """Rebuild the model recorded in a checkpoint; returns (model, augment)."""
    from .checkpoint import CheckpointError, load_arrays
    arrays = load_arrays(checkpoint)
    if "meta.dims" not in arrays:
        raise CheckpointError(f"{checkpoint}: missing meta.dims record")
    d0, layers, heads, hidden, khop, structural, augment = (
        arrays["meta.dims"].ravel().tolist())
    mc = ModelConfig(d0=int(d0), layers=int(layers), heads=int(heads),
                     hidden=int(hidden), dropout=cfg.train.dropout,
                     khop=int(khop), structural=bool(structural))
    stored = arrays.get("meta.config")
    if stored is not None:
        expected = _hash_record(config_hash(cfg))
        if stored.shape != expected.shape or not np.array_equal(stored, expected):
            raise CheckpointError(
                f"{checkpoint}: checkpoint was written under a different config")
    model = DegFairGT(mc, seed=cfg.train.seed)
    load_checkpoint(model, None, checkpoint)
    return model, bool(augment)


def _compute_embeddings(cfg: RunConfig, g: Graph, checkpoint: Path) -> np.ndarray:
    model, augment = _restore_model(cfg, g, checkpoint)
    t = cfg.train
    ctx = build_structural_context(g, clusters=t.clusters, khop=t.khop,
                                   p_steps=t.p_steps, xi=t.xi, zeta=t.zeta,
                                   seed=t.seed)
    return model.embed(g.features, eval_inputs(g, ctx, augment=augment))


def _write_embeddings(z: np.ndarray, path: Path, chash: str) -> None:
    lines = [f"# config_hash={chash}"]
    for row in z:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def load_embeddings(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)


def run_pretrain(cfg: RunConfig, out: Path, threads: int = 1) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    g = acquire_graph(cfg)
    _train_one(cfg, g, augment=True, structural=True, out=out)
    _write_meta(out, cfg, "pretrain", threads)
    return out / CHECKPOINT_NAME


def run_embed(cfg: RunConfig, out: Path, threads: int = 1,
              checkpoint: Path | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = checkpoint or out / CHECKPOINT_NAME
    g = acquire_graph(cfg)
    z = _compute_embeddings(cfg, g, checkpoint)
    _write_embeddings(z, out / EMBED_NAME, config_hash(cfg))
    _write_meta(out, cfg, "embed", threads)
    return out / EMBED_NAME


def run_evaluate(cfg: RunConfig, out: Path, threads: int = 1,
                 checkpoint: Path | None = None,
                 embeddings: Path | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    g = acquire_graph(cfg)
    if embeddings is not None:
        z = load_embeddings(embeddings)
    else:
        checkpoint = checkpoint or out / CHECKPOINT_NAME
        z = _compute_embeddings(cfg, g, checkpoint)
    if z.shape[0] != g.n:
        raise ValueError(
            f"embeddings have {z.shape[0]} rows but the graph has {g.n} nodes")
    report = evaluate_embeddings(
        z, g, fairness=cfg.eval.fairness, probe_repeats=cfg.eval.probe_repeats,
        seed=cfg.train.seed, config_hash=config_hash(cfg))
    report.metadata["threads"] = threads
    report.to_csv(out / REPORT_NAME)
    _write_meta(out, cfg, "evaluate", threads)
    return out / REPORT_NAME


def run_ablate(cfg: RunConfig, out: Path, threads: int = 1) -> Path:
    """Train, embed, and evaluate the four augmentation/attention cells."""
    out.mkdir(parents=True, exist_ok=True)
    g = acquire_graph(cfg)
    chash = config_hash(cfg)
    summary = ["cell,metric,mean,std,repeats"]
    for cell, augment, structural in ABLATION_CELLS:
        cell_dir = out / cell
        cell_dir.mkdir(parents=True, exist_ok=True)
        model = _train_one(cfg, g, augment=augment, structural=structural,
                           out=cell_dir)
        t = cfg.train
        ctx = build_structural_context(g, clusters=t.clusters, khop=t.khop,
                                       p_steps=t.p_steps, xi=t.xi, zeta=t.zeta,
                                       seed=t.seed)
        z = model.embed(g.features, eval_inputs(g, ctx, augment=augment))
        _write_embeddings(z, cell_dir / EMBED_NAME, chash)
        report = evaluate_embeddings(
            z, g, fairness=cfg.eval.fairness,
            probe_repeats=cfg.eval.probe_repeats, seed=t.seed,
            config_hash=chash)
        report.metadata["threads"] = threads
        report.metadata["cell"] = cell
        report.to_csv(cell_dir / REPORT_NAME)
        for name, mean, std, repeats in report.rows:
            summary.append(f"{cell},{name},{mean!r},{std!r},{repeats}")
    (out / "ablate_summary.csv").write_text("\n".join(summary) + "\n")
    _write_meta(out, cfg, "ablate", threads)
    return out / "ablate_summary.csv"


def run_synth(cfg: RunConfig, out: Path, threads: int = 1) -> Path:
    from .config import ConfigError
    if cfg.synthetic is None:
        raise ConfigError("synthetic: required for the synth command")
    out.mkdir(parents=True, exist_ok=True)
    g = synth_sbm(cfg.synthetic)
    chash = config_hash(cfg)

    lines = [f"# config_hash={chash}"]
    lines += [f"{u} {v}" for u, v in g.edges]
    (out / "edges.txt").write_text("\n".join(lines) + "\n")

    feat = [",".join(repr(float(v)) for v in row) for row in g.features]
    (out / "features.csv").write_text("\n".join(feat) + "\n")

    (out / "labels.txt").write_text(
        "\n".join(str(int(c)) for c in g.labels) + "\n")
    _write_meta(out, cfg, "synth", threads)
    return out / "edges.txt"
