"""Fair node classification with a variational graph encoder trained under
a conditional fairness bottleneck objective."""
from .config import TrainConfig, read_config
from .data import load_dataset, load_graph_files, synth_biased_graph
from .graph import (AttributedGraph, NormalizedAdjacency, SplitSpec, build_graph, flip_sensitive,
                    normalize_adjacency, perturb_features)
from .loss import LossBreakdown, cfb_loss, conditional_nll, gaussian_kl, verify_bounds_toy
from .metrics import MetricsReport, evaluate
from .model import GrafairModel, Variant, decode, encode, init_weights, load_model, predict_labels, save_model
from .train import ablation_matrix, run_experiment, sweep_beta, train

__version__ = "0.1.0"

__all__ = [
    "TrainConfig", "read_config", "load_dataset", "load_graph_files", "synth_biased_graph",
    "AttributedGraph", "NormalizedAdjacency", "SplitSpec", "build_graph", "flip_sensitive",
    "normalize_adjacency", "perturb_features", "LossBreakdown", "cfb_loss", "conditional_nll",
    "gaussian_kl", "verify_bounds_toy", "MetricsReport", "evaluate", "GrafairModel", "Variant", "decode",
    "encode", "init_weights", "load_model", "predict_labels", "save_model", "ablation_matrix",
    "run_experiment", "sweep_beta", "train",
]
