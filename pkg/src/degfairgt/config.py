"""Strict JSON run configuration.

One document drives a whole experiment: the input graph (either dataset
file paths or a synthetic benchmark spec, never both), training
hyperparameters, model dimensions, the evaluation battery, and the output
directory. Unknown keys anywhere are errors; messages name the offending
field. Parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .synth import SbmSpec
from .train import TrainConfig

__all__ = ["ConfigError", "DatasetPaths", "EvalSpec", "RunConfig",
           "parse_config", "load_config", "serialize_config", "config_hash"]


class ConfigError(ValueError):
    """Configuration rejected; the message names the field."""


@dataclass(frozen=True)
class DatasetPaths:
    edges: str
    features: str
    labels: str | None = None


@dataclass(frozen=True)
class EvalSpec:
    fairness: tuple[tuple[int, float], ...] = ((1, 0.2),)
    probe_repeats: int = 10


@dataclass(frozen=True)
class RunConfig:
    train: TrainConfig = TrainConfig()
    layers: int = 4
    heads: int = 4
    hidden: int = 64
    dataset: DatasetPaths | None = None
    synthetic: SbmSpec | None = None
    eval: EvalSpec = EvalSpec()
    output_dir: str = "runs"


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}{key}: unknown key")


def _typed(obj: dict, key: str, kinds, default, where: str):
    if key not in obj:
        return default
    value = obj[key]
    if kinds is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ConfigError(f"{where}{key}: expected {getattr(kinds, '__name__', kinds)},"
                          f" got {type(value).__name__}")
    return value


_INT_TRAIN_FIELDS = frozenset({"epochs", "clusters", "p_steps", "khop", "seed"})


def _parse_train(obj, where="train.") -> TrainConfig:
    if not isinstance(obj, dict):
        raise ConfigError("train: expected an object")
    defaults = TrainConfig()
    fields = {f.name for f in dataclasses.fields(TrainConfig)}
    _reject_unknown(obj, fields, where)
    kwargs = {}
    for name in fields:
        kind = int if name in _INT_TRAIN_FIELDS else float
        kwargs[name] = _typed(obj, name, kind, getattr(defaults, name), where)
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from None


def _parse_dataset(obj, base: Path) -> DatasetPaths:
    if not isinstance(obj, dict):
        raise ConfigError("dataset: expected an object")
    _reject_unknown(obj, {"edges", "features", "labels"}, "dataset.")
    for key in ("edges", "features"):
        if key not in obj:
            raise ConfigError(f"dataset.{key}: required")
    paths = {}
    for key in ("edges", "features", "labels"):
        if key not in obj:
            paths[key] = None
            continue
        raw = _typed(obj, key, str, None, "dataset.")
        resolved = Path(raw) if Path(raw).is_absolute() else base / raw
        if not resolved.exists():
            raise ConfigError(f"dataset.{key}: file not found: {resolved}")
        paths[key] = str(resolved)
    return DatasetPaths(**paths)


def _parse_synth(obj) -> SbmSpec:
    if not isinstance(obj, dict):
        raise ConfigError("synthetic: expected an object")
    allowed = {"blocks", "p_in", "p_out", "degree_skew", "noise", "seed"}
    _reject_unknown(obj, allowed, "synthetic.")
    blocks = obj.get("blocks")
    if (not isinstance(blocks, list) or not blocks
            or not all(isinstance(b, int) and not isinstance(b, bool) for b in blocks)):
        raise ConfigError("synthetic.blocks: expected a non-empty list of ints")
    for key in ("p_in", "p_out"):
        if key not in obj:
            raise ConfigError(f"synthetic.{key}: required")
    try:
        return SbmSpec(
            blocks=tuple(blocks),
            p_in=_typed(obj, "p_in", float, None, "synthetic."),
            p_out=_typed(obj, "p_out", float, None, "synthetic."),
            degree_skew=_typed(obj, "degree_skew", float, 0.0, "synthetic."),
            noise=_typed(obj, "noise", float, 0.5, "synthetic."),
            seed=_typed(obj, "seed", int, 0, "synthetic."),
        )
    except ValueError as exc:
        raise ConfigError(f"synthetic: {exc}") from None


def _parse_eval(obj) -> EvalSpec:
    if not isinstance(obj, dict):
        raise ConfigError("eval: expected an object")
    _reject_unknown(obj, {"fairness", "probe_repeats"}, "eval.")
    fairness = obj.get("fairness", [[1, 0.2]])
    if not isinstance(fairness, list):
        raise ConfigError("eval.fairness: expected a list of [r, q] pairs")
    parsed = []
    for item in fairness:
        if (not isinstance(item, list) or len(item) != 2
                or not isinstance(item[0], int) or isinstance(item[0], bool)
                or not isinstance(item[1], (int, float)) or isinstance(item[1], bool)):
            raise ConfigError("eval.fairness: each entry must be [r:int, q:number]")
        r, q = item[0], float(item[1])
        if r < 1 or not 0.0 < q <= 0.5:
            raise ConfigError(f"eval.fairness: need r >= 1 and 0 < q <= 0.5, got {item}")
        parsed.append((r, q))
    repeats = _typed(obj, "probe_repeats", int, 10, "eval.")
    if repeats < 1:
        raise ConfigError(f"eval.probe_repeats: must be >= 1, got {repeats}")
    return EvalSpec(fairness=tuple(parsed), probe_repeats=repeats)


def parse_config(doc: dict, base_dir=".") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    allowed = {"train", "model", "dataset", "synthetic", "eval", "output_dir"}
    _reject_unknown(doc, allowed, "")
    has_dataset = "dataset" in doc
    has_synth = "synthetic" in doc
    if has_dataset == has_synth:
        raise ConfigError("exactly one of 'dataset' or 'synthetic' is required")

    model = doc.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model: expected an object")
    _reject_unknown(model, {"layers", "heads", "hidden"}, "model.")
    layers = _typed(model, "layers", int, 4, "model.")
    heads = _typed(model, "heads", int, 4, "model.")
    hidden = _typed(model, "hidden", int, 64, "model.")
    if min(layers, heads, hidden) < 1:
        raise ConfigError("model: layers, heads, hidden must be >= 1")
    if hidden % heads:
        raise ConfigError(f"model.hidden: {hidden} not divisible by heads={heads}")

    return RunConfig(
        train=_parse_train(doc.get("train", {})),
        layers=layers, heads=heads, hidden=hidden,
        dataset=_parse_dataset(doc["dataset"], Path(base_dir)) if has_dataset else None,
        synthetic=_parse_synth(doc["synthetic"]) if has_synth else None,
        eval=_parse_eval(doc.get("eval", {})),
        output_dir=_typed(doc, "output_dir", str, "runs", ""),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, base_dir=path.parent)


def _as_dict(cfg: RunConfig) -> dict:
    doc: dict = {}
    if cfg.dataset is not None:
        doc["dataset"] = {k: v for k, v in dataclasses.asdict(cfg.dataset).items()
                          if v is not None}
    if cfg.synthetic is not None:
        s = dataclasses.asdict(cfg.synthetic)
        s["blocks"] = list(s["blocks"])
        doc["synthetic"] = s
    doc["train"] = dataclasses.asdict(cfg.train)
    doc["model"] = {"layers": cfg.layers, "heads": cfg.heads, "hidden": cfg.hidden}
    doc["eval"] = {"fairness": [[r, q] for r, q in cfg.eval.fairness],
                   "probe_repeats": cfg.eval.probe_repeats}
    doc["output_dir"] = cfg.output_dir
    return doc


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(_as_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(_as_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
