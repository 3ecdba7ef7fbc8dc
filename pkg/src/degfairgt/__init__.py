"""Degree-fair structural graph transformer: learnable degree-aware graph
augmentation, structural self-attention, self-supervised structure
preservation, and a degree-fairness evaluation suite."""

from .augment import (AugmentedGraph, augmentation_bce, deterministic_augmented,
                      original_augmented, sample_augmented)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .clustering import kmeans
from .config import (ConfigError, DatasetPaths, EvalSpec, RunConfig, config_hash,
                     load_config, parse_config, serialize_config)
from .evaluate import (EvalReport, FairnessGroups, clustering_quality,
                       conductance, delta_eo, delta_sp, evaluate_embeddings,
                       fairness_groups, generalized_degree, linear_probe,
                       modularity)
from .graph import (Graph, GraphFormatError, KHopIndex, build_graph,
                    build_khop_index, load_graph, transition_powers)
from .model import AttentionInputs, DegFairGT, ModelConfig, build_attention_inputs
from .optim import Adam
from .precompute import (StructuralContext, build_structural_context,
                         compose_a_tilde, context_mask, degree_weight_matrix,
                         pair_proximity, proximity_vector, transition_targets)
from .synth import SbmSpec, synth_sbm
from .tensor import Tensor, backward
from .train import (PretrainResult, TrainConfig, TrainingError, loss_l1,
                    pretrain, total_loss)

__version__ = "0.1.0"

__all__ = [
    "AugmentedGraph", "augmentation_bce", "deterministic_augmented",
    "original_augmented", "sample_augmented",
    "CheckpointError", "load_checkpoint", "save_checkpoint",
    "kmeans",
    "ConfigError", "DatasetPaths", "EvalSpec", "RunConfig", "config_hash",
    "load_config", "parse_config", "serialize_config",
    "EvalReport", "FairnessGroups", "clustering_quality", "conductance",
    "delta_eo", "delta_sp", "evaluate_embeddings", "fairness_groups",
    "generalized_degree", "linear_probe", "modularity",
    "Graph", "GraphFormatError", "KHopIndex", "build_graph",
    "build_khop_index", "load_graph", "transition_powers",
    "AttentionInputs", "DegFairGT", "ModelConfig", "build_attention_inputs",
    "Adam",
    "StructuralContext", "build_structural_context", "compose_a_tilde",
    "context_mask", "degree_weight_matrix", "pair_proximity",
    "proximity_vector", "transition_targets",
    "SbmSpec", "synth_sbm",
    "Tensor", "backward",
    "PretrainResult", "TrainConfig", "TrainingError", "loss_l1", "pretrain",
    "total_loss",
    "__version__",
]
