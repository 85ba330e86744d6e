"""Immutable attributed graphs and their normalized adjacency views."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyGraph, IndexOutOfRange, InvalidParameter, NegativeStd, NonBinaryColumn

AGGREGATION_MODES = ("symmetric-gcn", "row-mean", "sum")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SplitSpec:
    """How to carve train/val/test masks.

    Either give explicit ``masks`` (train, val, test boolean vectors) or let
    the builder draw a label-stratified random split with ``ratios``.
    """

    ratios: tuple = (0.5, 0.25, 0.25)
    seed: int = 0
    masks: Optional[tuple] = None

    def resolve(self, labels: np.ndarray) -> tuple:
        n = len(labels)
        if self.masks is not None:
            train, val, test = (np.asarray(m, dtype=bool) for m in self.masks)
            for m in (train, val, test):
                if m.shape != (n,):
                    raise InvalidParameter(f"mask has shape {m.shape}, expected ({n},)")
            if np.any(train & val) or np.any(train & test) or np.any(val & test):
                raise InvalidParameter("train/val/test masks overlap")
            return train, val, test
        r = np.asarray(self.ratios, dtype=float)
        if r.shape != (3,) or np.any(r < 0) or r.sum() > 1 + 1e-9:
            raise InvalidParameter(f"bad split ratios {self.ratios}")
        rng = np.random.default_rng(self.seed)
        train = np.zeros(n, dtype=bool)
        val = np.zeros(n, dtype=bool)
        test = np.zeros(n, dtype=bool)
        for cls in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == cls))
            n_tr = int(round(r[0] * len(idx)))
            n_va = int(round(r[1] * len(idx)))
            n_te = min(int(round(r[2] * len(idx))), len(idx) - n_tr - n_va)
            train[idx[:n_tr]] = True
            val[idx[n_tr:n_tr + n_va]] = True
            test[idx[n_tr + n_va:n_tr + n_va + n_te]] = True
        return train, val, test


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected, unweighted graph with node features, binary sensitive
    attribute and binary labels.

    ``adjacency`` is a symmetric 0/1 CSR matrix without self-loops. The
    sensitive attribute is also a column of ``features`` (``sensitive_col``).
    Instances are never mutated; derived graphs share ``adjacency``.
    """

    features: np.ndarray
    adjacency: sp.csr_matrix
    sensitive: np.ndarray
    labels: np.ndarray
    sensitive_col: int
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    feature_names: Optional[tuple] = field(default=None)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def edges(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with i < j, sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        e = np.stack([coo.row, coo.col], axis=1).astype(np.int64)
        return e[np.lexsort((e[:, 1], e[:, 0]))]

    def masks(self) -> dict:
        return {"train": self.train_mask, "val": self.val_mask, "test": self.test_mask}

    def replace(self, **changes) -> "AttributedGraph":
        fields = dict(
            features=self.features, adjacency=self.adjacency, sensitive=self.sensitive,
            labels=self.labels, sensitive_col=self.sensitive_col, train_mask=self.train_mask,
            val_mask=self.val_mask, test_mask=self.test_mask, feature_names=self.feature_names,
        )
        fields.update(changes)
        for k in ("features", "sensitive", "labels", "train_mask", "val_mask", "test_mask"):
            if k in changes:
                fields[k] = _frozen(fields[k])
        return AttributedGraph(**fields)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        if self.sensitive_col != other.sensitive_col:
            return False
        arrays = ("features", "sensitive", "labels", "train_mask", "val_mask", "test_mask")
        if not all(np.array_equal(getattr(self, k), getattr(other, k)) for k in arrays):
            return False
        a, b = self.adjacency, other.adjacency
        return a.shape == b.shape and (a != b).nnz == 0

    __hash__ = None


def _check_binary(values: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isin(values, (0, 1))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonBinaryColumn(f"{what} must be 0/1; found {values[i]!r} at node {i}")
    return values.astype(np.int64)


def build_graph(
    features,
    edge_list,
    sensitive_col: int,
    labels,
    split: SplitSpec | None = None,
    feature_names: Sequence[str] | None = None,
) -> AttributedGraph:
    """Validate raw arrays and assemble an :class:`AttributedGraph`.

    Duplicate and reversed edge pairs collapse to one undirected edge;
    self-loops are dropped.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyGraph(f"need a non-empty 2-D feature matrix, got shape {x.shape}")
    n, d = x.shape
    if not 0 <= sensitive_col < d:
        raise IndexOutOfRange(f"sensitive_col {sensitive_col} outside 0..{d - 1}")
    y = np.asarray(labels)
    if y.shape != (n,):
        raise InvalidParameter(f"labels has shape {y.shape}, expected ({n},)")
    y = _check_binary(y, "labels")
    s = _check_binary(x[:, sensitive_col], "sensitive column")

    e = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
        raise IndexOutOfRange(f"edge ({bad[0]}, {bad[1]}) references a node outside 0..{n - 1}")
    e = e[e[:, 0] != e[:, 1]]
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1.0
    adj.sort_indices()

    train, val, test = (split or SplitSpec()).resolve(y)
    names = tuple(feature_names) if feature_names is not None else None
    if names is not None and len(names) != d:
        raise InvalidParameter(f"{len(names)} feature names for {d} columns")
    return AttributedGraph(
        features=_frozen(x), adjacency=adj, sensitive=_frozen(s), labels=_frozen(y),
        sensitive_col=int(sensitive_col), train_mask=_frozen(train), val_mask=_frozen(val),
        test_mask=_frozen(test), feature_names=names,
    )


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Propagation matrix used for neighbor aggregation."""

    matrix: sp.csr_matrix
    mode: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def normalize_adjacency(g: AttributedGraph, mode: str = "symmetric-gcn") -> NormalizedAdjacency:
    """Self-loop-augmented adjacency, scaled according to ``mode``.

    ``symmetric-gcn``: D^-1/2 (A+I) D^-1/2 with D the degrees of A+I.
    ``row-mean``: D^-1 (A+I), rows sum to one.
    ``sum``: A+I unscaled.
    """
    if mode not in AGGREGATION_MODES:
        raise InvalidParameter(f"unknown aggregation mode {mode!r}; expected one of {AGGREGATION_MODES}")
    a = (g.adjacency + sp.identity(g.n, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    if mode == "symmetric-gcn":
        inv = 1.0 / np.sqrt(deg)
        m = sp.diags(inv) @ a @ sp.diags(inv)
    elif mode == "row-mean":
        m = sp.diags(1.0 / deg) @ a
    else:
        m = a
    m = sp.csr_matrix(m)
    m.sort_indices()
    return NormalizedAdjacency(matrix=m, mode=mode)


def sample_neighbors(g: AttributedGraph, k: int, rng: np.random.Generator) -> NormalizedAdjacency:
    """Keep up to ``k`` uniformly chosen neighbors per node (plus the node
    itself), to be summed. Rows are independent draws, so the result is in
    general not symmetric."""
    if k < 1:
        raise InvalidParameter(f"neighbor sample size must be >= 1, got {k}")
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    rows, cols = [], []
    for v in range(g.n):
        nbrs = indices[indptr[v]:indptr[v + 1]]
        if len(nbrs) > k:
            nbrs = np.sort(rng.choice(nbrs, size=k, replace=False))
        rows.append(np.full(len(nbrs) + 1, v))
        cols.append(np.concatenate([[v], nbrs]))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    m = sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(g.n, g.n))
    m.sort_indices()
    return NormalizedAdjacency(matrix=m, mode="sum")


def flip_sensitive(g: AttributedGraph, target) -> AttributedGraph:
    """Counterfactual copy with every node's sensitive attribute set to
    ``target``. ``target`` is 0/1 or a per-node 0/1 vector."""
    s = np.broadcast_to(np.asarray(target), (g.n,))
    s = _check_binary(s, "target")
    x = g.features.copy()
    x[:, g.sensitive_col] = s
    return g.replace(features=x, sensitive=s)


def perturb_features(g: AttributedGraph, noise_std: float, rng_seed: int) -> AttributedGraph:
    """Add i.i.d. N(0, noise_std^2) noise to every non-sensitive feature of
    the test nodes."""
    if noise_std < 0:
        raise NegativeStd(f"noise_std must be >= 0, got {noise_std}")
    if noise_std == 0:
        return g
    rng = np.random.default_rng(rng_seed)
    idx = np.flatnonzero(g.test_mask)
    noise = rng.normal(0.0, noise_std, size=(len(idx), g.num_features))
    noise[:, g.sensitive_col] = 0.0
    x = g.features.copy()
    x[idx] += noise
    return g.replace(features=x)
