"""Training loop, multi-seed experiments, beta sweeps and ablations."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .config import TrainConfig
from .data import load_dataset, load_graph_files
from .errors import InvalidParameter, NonFiniteLoss
from .graph import AttributedGraph, NormalizedAdjacency, SplitSpec, normalize_adjacency, sample_neighbors
from .loss import cfb_loss_value, nll_value
from .metrics import MetricsReport, aggregate, evaluate
from .model import (ALL_VARIANTS, GrafairModel, ModelDims, Variant, decode_values, encode, forward,
                    init_weights)
from .optim import AdamState, adam_step

_MODES = {"gcn": "symmetric-gcn", "mean": "row-mean", "sum": "sum"}


def aggregation_matrix(g: AttributedGraph, cfg: TrainConfig, rng: Optional[np.random.Generator] = None) -> NormalizedAdjacency:
    if cfg.aggregation == "sampled":
        return sample_neighbors(g, cfg.neighbor_samples, rng or np.random.default_rng(0))
    return normalize_adjacency(g, _MODES[cfg.aggregation])


def load_config_graph(cfg: TrainConfig) -> AttributedGraph:
    """Graph named by a config: explicit file paths win over ``dataset``."""
    split = SplitSpec(ratios=cfg.split_ratios, seed=cfg.split_seed)
    if cfg.features_path:
        if not (cfg.edges_path and cfg.sensitive_column and cfg.label_column):
            raise InvalidParameter("features_path needs edges_path, sensitive_column and label_column")
        return load_graph_files(cfg.features_path, cfg.edges_path, cfg.sensitive_column, cfg.label_column,
                                mask_path=cfg.masks_path, split=split, feature_norm=cfg.feature_norm)
    return load_dataset(cfg.dataset, root=cfg.data_root, split=split, mask_path=cfg.masks_path,
                        feature_norm=cfg.feature_norm)


@dataclass
class RunResult:
    seed: int
    trace: list
    metrics: MetricsReport
    epoch_seconds: list = field(default_factory=list)
    model: Optional[GrafairModel] = field(default=None, repr=False)

    def as_dict(self, timing: bool = False) -> dict:
        d = {"seed": self.seed, "trace": [t.as_dict() for t in self.trace], "metrics": self.metrics.as_dict()}
        if timing:
            d["epoch_seconds"] = list(self.epoch_seconds)
        return d

    @property
    def mean_epoch_seconds(self) -> float:
        return float(np.mean(self.epoch_seconds)) if self.epoch_seconds else 0.0


def build_model(g: AttributedGraph, cfg: TrainConfig, seed: int) -> GrafairModel:
    dims = ModelDims(g.num_features, cfg.hidden_dim, cfg.encoder_layers, cfg.classifier_layers)
    return init_weights(dims, seed, cfg.variant, cfg.sample_final_only)


def fit(model: GrafairModel, g: AttributedGraph, cfg: TrainConfig, seed: int):
    """Optimize ``model.params`` in place for ``cfg.epochs`` epochs.

    Returns ``(trace, epoch_seconds)``.
    """
    rng = np.random.default_rng([seed, 1])
    fixed_adj = None if cfg.aggregation == "sampled" else aggregation_matrix(g, cfg)
    state = AdamState()
    trace, seconds = [], []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        adj = fixed_adj or aggregation_matrix(g, cfg, rng)
        params = {k: ad.parameter(v, k) for k, v in model.params.items()}
        fwd = forward(model, g, adj, sample=True, rng=rng, params=params)
        total, breakdown = cfb_loss_value(fwd, g.labels, g.train_mask, cfg.beta, model.variant)
        if not np.isfinite(breakdown.total):
            raise NonFiniteLoss(epoch, breakdown.total)
        ad.backward(total)
        grads = {k: (p.grad if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()}
        model.params, state = adam_step(model.params, grads, state, cfg.lr)
        seconds.append(time.perf_counter() - t0)
        trace.append(breakdown)
    return trace, seconds


def retrain_decoder(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, seed: int,
                    epochs: int = 200, lr: float = 0.01) -> GrafairModel:
    """Fit a fresh softmax decoder on the frozen posterior means of the
    training nodes, without the sensitive attribute."""
    out = model.copy()
    out.variant = Variant.NO_S_CONCAT
    rng = np.random.default_rng([seed, 2])
    for k in [k for k in out.params if k.startswith("dec")]:
        del out.params[k]
    width = model.hidden_dim
    for k in range(model.dims.classifier_layers):
        n_out = model.dims.num_classes if k == model.dims.classifier_layers - 1 else model.hidden_dim
        bound = np.sqrt(6.0 / (width + n_out))
        out.params[f"dec{k}.W"] = rng.uniform(-bound, bound, size=(width, n_out))
        out.params[f"dec{k}.b"] = np.zeros((1, n_out))
        width = n_out
    z = ad.constant(encode(model, g, adj, sample=False).mu)
    state = AdamState()
    for _ in range(epochs):
        dec = {k: ad.parameter(v, k) for k, v in out.params.items() if k.startswith("dec")}
        loss = nll_value(decode_values(out, z, g.sensitive, dec), g.labels, g.train_mask)
        ad.backward(loss)
        new, state = adam_step({k: out.params[k] for k in dec}, {k: p.grad for k, p in dec.items()}, state, lr)
        out.params.update(new)
    return out


def eval_adjacency(g: AttributedGraph, cfg: TrainConfig, seed: int) -> NormalizedAdjacency:
    # sampled aggregation is evaluated on one fixed, seeded neighbor draw
    return aggregation_matrix(g, cfg, np.random.default_rng([seed, 3]))


def evaluate_model(model: GrafairModel, g: AttributedGraph, cfg: TrainConfig, seed: int) -> MetricsReport:
    adj = eval_adjacency(g, cfg, seed)
    if cfg.s_mode == "retrain" and model.variant.concat_s:
        model, s_mode = retrain_decoder(model, g, adj, seed), "observed"
    else:
        s_mode = "observed" if cfg.s_mode == "retrain" else cfg.s_mode
    return evaluate(model, g, adj, g.test_mask, cfg.noise_std, cfg.rs_trials, seed, s_mode)


def train(g: AttributedGraph, cfg: TrainConfig, seed: Optional[int] = None) -> RunResult:
    """Train one model and evaluate it on the test mask (sampling off)."""
    seed = cfg.seeds[0] if seed is None else int(seed)
    model = build_model(g, cfg, seed)
    trace, seconds = fit(model, g, cfg, seed)
    return RunResult(seed, trace, evaluate_model(model, g, cfg, seed), seconds, model)


@dataclass
class ExperimentResult:
    config: TrainConfig
    runs: list
    summary: dict

    def metric(self, key: str) -> float:
        return self.summary[key]["mean"]

    def as_dict(self, timing: bool = False) -> dict:
        return {
            "config": self.config.as_dict(),
            "runs": [r.as_dict(timing) for r in self.runs],
            "summary": self.summary,
        }


def _train_job(args):
    return train(*args)


def run_experiment(g: AttributedGraph, cfg: TrainConfig) -> ExperimentResult:
    """Train once per seed and aggregate (mean, population std)."""
    seeds = sorted(cfg.seeds)
    jobs = [(g, cfg, s) for s in seeds]
    if cfg.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(seeds))) as pool:
            runs = list(pool.map(_train_job, jobs))
    else:
        runs = [_train_job(j) for j in jobs]
    runs.sort(key=lambda r: r.seed)
    return ExperimentResult(cfg, runs, aggregate([r.metrics for r in runs]))


TABLE_METRICS = ("f1", "delta_sp", "delta_eo", "delta_cf", "delta_rs")


def _row(label_key: str, label, result: ExperimentResult) -> dict:
    row = {label_key: label}
    for k in TABLE_METRICS:
        row[k] = result.summary[k]["mean"]
        row[f"{k}_std"] = result.summary[k]["std"]
    return row


def sweep_beta(g: AttributedGraph, cfg: TrainConfig, betas: Sequence[float]):
    """One experiment per beta (same seeds for every row), in input order.

    Returns ``(rows, results)``: table rows with mean/std per metric, and the
    full :class:`ExperimentResult` for each beta.
    """
    if not betas:
        raise InvalidParameter("betas must be non-empty")
    results = [run_experiment(g, cfg.replace(beta=float(b))) for b in betas]
    return [_row("beta", float(b), r) for b, r in zip(betas, results)], results


def ablation_matrix(g: AttributedGraph, cfg: TrainConfig, variants: Sequence = ALL_VARIANTS):
    """One experiment per model variant; same return shape as
    :func:`sweep_beta`."""
    variants = [Variant.parse(v) for v in variants]
    results = [run_experiment(g, cfg.replace(variant=v.value)) for v in variants]
    return [_row("variant", v.value, r) for v, r in zip(variants, results)], results
