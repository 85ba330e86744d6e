"""Utility, group-fairness, counterfactual and robustness metrics.

All scores are percentages in [0, 100], evaluated on the nodes selected by
a boolean mask, with inference run deterministically (z = mu).
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateGroup, EmptyMask, InvalidParameter, NegativeStd
from .graph import AttributedGraph, NormalizedAdjacency, flip_sensitive, perturb_features
from .model import GrafairModel, predict_labels, predict_proba


def _select(mask, *arrays):
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise EmptyMask("mask selects no nodes")
    return [np.asarray(a)[m] for a in arrays]


def f1_score(pred, labels, mask) -> float:
    """F1 of the positive class; 0 when precision + recall is 0."""
    p, y = _select(mask, pred, labels)
    tp = np.sum((p == 1) & (y == 1))
    fp = np.sum((p == 1) & (y == 0))
    fn = np.sum((p == 0) & (y == 1))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(100.0 * 2 * precision * recall / (precision + recall))


def accuracy(pred, labels, mask) -> float:
    p, y = _select(mask, pred, labels)
    return float(100.0 * np.mean(p == y))


def statistical_parity(pred, sensitive, mask) -> float:
    p, s = _select(mask, pred, sensitive)
    rates = []
    for g in (0, 1):
        grp = p[s == g]
        if grp.size == 0:
            raise DegenerateGroup(f"no nodes with sensitive={g} in mask")
        rates.append(np.mean(grp == 1))
    return float(100.0 * abs(rates[1] - rates[0]))


def equal_opportunity(pred, labels, sensitive, mask) -> float:
    p, y, s = _select(mask, pred, labels, sensitive)
    tprs = []
    for g in (0, 1):
        grp = p[(s == g) & (y == 1)]
        if grp.size == 0:
            raise DegenerateGroup(f"no positive-label nodes with sensitive={g} in mask")
        tprs.append(np.mean(grp == 1))
    return float(100.0 * abs(tprs[1] - tprs[0]))


def group_counts(pred, labels, sensitive, mask) -> np.ndarray:
    """2x2x2 contingency table indexed [prediction, label, sensitive]."""
    p, y, s = _select(mask, pred, labels, sensitive)
    counts = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(counts, (p, y, s), 1)
    return counts


class CounterfactualResult(NamedTuple):
    delta: float      # 100 * |acc(s<-1) - acc(s<-0)|
    flip_rate: float  # % of nodes whose prediction differs between interventions


class RobustnessResult(NamedTuple):
    delta: float        # mean 100 * |clean acc - perturbed acc|
    change_rate: float  # mean % of nodes whose prediction changed


def predict(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, s_mode: str = "observed",
            s_prior: Optional[float] = None) -> np.ndarray:
    return predict_labels(predict_proba(model, g, adj, s_mode=s_mode, s_prior=s_prior))


def counterfactual_fairness(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, mask,
                            s_mode: str = "observed") -> CounterfactualResult:
    """Intervene s <- 1 and s <- 0 on every node (features and decoder input)
    and compare accuracies against the true labels."""
    m = np.asarray(mask, dtype=bool)
    prior = float(g.sensitive[g.train_mask].mean()) if g.train_mask.any() else 0.5
    p1 = predict(model, flip_sensitive(g, 1), adj, s_mode, prior)
    p0 = predict(model, flip_sensitive(g, 0), adj, s_mode, prior)
    acc1 = accuracy(p1, g.labels, m)
    acc0 = accuracy(p0, g.labels, m)
    return CounterfactualResult(abs(acc1 - acc0), float(100.0 * np.mean(p1[m] != p0[m])))


def robustness_score(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, mask,
                     noise_std: float = 1.0, n_trials: int = 5, seed: int = 0,
                     s_mode: str = "observed") -> RobustnessResult:
    """Accuracy drop under Gaussian noise on non-sensitive test features,
    averaged over ``n_trials`` independent draws."""
    if noise_std < 0:
        raise NegativeStd(f"noise_std must be >= 0, got {noise_std}")
    if n_trials < 1:
        raise InvalidParameter(f"n_trials must be >= 1, got {n_trials}")
    m = np.asarray(mask, dtype=bool)
    prior = float(g.sensitive[g.train_mask].mean()) if g.train_mask.any() else 0.5
    clean = predict(model, g, adj, s_mode, prior)
    clean_acc = accuracy(clean, g.labels, m)
    deltas, changes = [], []
    for t in range(n_trials):
        noisy = predict(model, perturb_features(g, noise_std, seed + t), adj, s_mode, prior)
        deltas.append(abs(clean_acc - accuracy(noisy, g.labels, m)))
        changes.append(100.0 * np.mean(clean[m] != noisy[m]))
    return RobustnessResult(float(np.mean(deltas)), float(np.mean(changes)))


METRIC_KEYS = ("f1", "accuracy", "delta_sp", "delta_eo", "delta_cf", "delta_rs", "cf_flip_rate", "rs_change_rate")


@dataclass
class MetricsReport:
    f1: float
    accuracy: float
    delta_sp: float
    delta_eo: float
    delta_cf: float
    delta_rs: float
    cf_flip_rate: float
    rs_change_rate: float
    group_counts: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["group_counts"] = self.group_counts.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["group_counts"] = np.asarray(d["group_counts"], dtype=np.int64)
        return cls(**d)


def evaluate(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, mask=None,
             noise_std: float = 1.0, n_trials: int = 5, seed: int = 0,
             s_mode: str = "observed") -> MetricsReport:
    m = g.test_mask if mask is None else np.asarray(mask, dtype=bool)
    prior = float(g.sensitive[g.train_mask].mean()) if g.train_mask.any() else 0.5
    pred = predict(model, g, adj, s_mode, prior)
    cf = counterfactual_fairness(model, g, adj, m, s_mode)
    rs = robustness_score(model, g, adj, m, noise_std, n_trials, seed, s_mode)
    return MetricsReport(
        f1=f1_score(pred, g.labels, m),
        accuracy=accuracy(pred, g.labels, m),
        delta_sp=statistical_parity(pred, g.sensitive, m),
        delta_eo=equal_opportunity(pred, g.labels, g.sensitive, m),
        delta_cf=cf.delta,
        delta_rs=rs.delta,
        cf_flip_rate=cf.flip_rate,
        rs_change_rate=rs.change_rate,
        group_counts=group_counts(pred, g.labels, g.sensitive, m),
    )


def aggregate(reports: list) -> dict:
    """Mean and population standard deviation of every scalar metric."""
    if not reports:
        raise ValueError("nothing to aggregate")
    out = {}
    for k in METRIC_KEYS:
        vals = np.array([getattr(r, k) for r in reports], dtype=float)
        out[k] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=0))}
    return out
