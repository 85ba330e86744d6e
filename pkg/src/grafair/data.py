"""Dataset files, benchmark loaders and a synthetic biased-graph generator.

File formats
------------
features  CSV with a header row, one row per node. The sensitive and label
          columns are named by the caller; non-numeric cells are only
          allowed where a dataset declares a value map (e.g. Female/Male).
edges     Two integer node indices per line separated by whitespace or a
          comma. Order, direction and duplicates do not matter. Lines
          starting with ``#`` are skipped.
masks     CSV with header ``node_id,split``; split is train, val or test.
          Nodes not listed belong to no split.
"""
from __future__ import annotations

import csv
import logging
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidParameter, MissingFile, ParseError
from .graph import AttributedGraph, SplitSpec, build_graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    feature_file: str
    edge_file: str
    sensitive: str
    label: str
    nodes: int
    features: int
    edges: int
    drop: tuple = ()
    value_maps: dict = field(default_factory=dict)


DATASETS = {
    "german": DatasetInfo(
        "german", "german.csv", "german_edges.txt", "Gender", "GoodCustomer", 1000, 27, 22242,
        drop=("OtherLoansAtStore", "PurposeOfLoan"),
        value_maps={"Gender": {"Female": 1, "Male": 0}, "GoodCustomer": {"-1": 0}},
    ),
    "credit": DatasetInfo(
        "credit", "credit.csv", "credit_edges.txt", "Age", "NoDefaultNextMonth", 30000, 13, 1436858,
        drop=("Single",),
    ),
    "bail": DatasetInfo("bail", "bail.csv", "bail_edges.txt", "WHITE", "RECID", 18876, 18, 321308),
}


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingFile(f"{path} does not exist")
    return path


def _to_float(cell: str, column: str, value_map: dict, path, line: int) -> float:
    cell = cell.strip()
    if cell in value_map:
        return float(value_map[cell])
    try:
        return float(cell)
    except ValueError:
        raise ParseError(path, line, f"column {column!r}: cannot parse {cell!r} as a number") from None


def read_feature_csv(path, sensitive: str, label: str, drop=(), value_maps: Optional[dict] = None):
    """Parse a node-attribute CSV.

    Returns ``(features, names, labels, sensitive_col)`` where ``features``
    excludes the label and dropped columns but keeps the sensitive one.
    """
    path = _require(Path(path))
    value_maps = value_maps or {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(path, 1, "empty file, expected a header row") from None
        for col in (sensitive, label):
            if col not in header:
                raise ParseError(path, 1, f"column {col!r} not in header")
        keep = [i for i, h in enumerate(header) if h != label and h not in drop]
        label_idx = header.index(label)
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, line_no, f"expected {len(header)} fields, found {len(row)}")
            rows.append([_to_float(row[i], header[i], value_maps.get(header[i], {}), path, line_no) for i in keep])
            labels.append(_to_float(row[label_idx], label, value_maps.get(label, {}), path, line_no))
    if not rows:
        raise ParseError(path, 2, "no data rows")
    names = tuple(header[i] for i in keep)
    return np.array(rows), names, np.array(labels), names.index(sensitive)


_SPLIT = re.compile(r"[\s,]+")


def read_edge_file(path) -> np.ndarray:
    path = _require(Path(path))
    pairs = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p for p in _SPLIT.split(text) if p]
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected two node indices, found {len(parts)} fields")
            try:
                a, b = (float(p) for p in parts)
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric node index in {text!r}") from None
            if a != int(a) or b != int(b):
                raise ParseError(path, line_no, f"node indices must be integers, got {text!r}")
            pairs.append((int(a), int(b)))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_mask_file(path, n: int) -> tuple:
    path = _require(Path(path))
    masks = {k: np.zeros(n, dtype=bool) for k in ("train", "val", "test")}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["node_id", "split"]:
            raise ParseError(path, 1, f"expected header node_id,split, got {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(path, line_no, f"expected 2 fields, found {len(row)}")
            node, split = row[0].strip(), row[1].strip()
            if not node.isdigit() or int(node) >= n:
                raise ParseError(path, line_no, f"bad node id {node!r}")
            if split not in masks:
                raise ParseError(path, line_no, f"unknown split {split!r}")
            masks[split][int(node)] = True
    return masks["train"], masks["val"], masks["test"]


def write_mask_file(path, g: AttributedGraph) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "split"])
        for name, m in g.masks().items():
            for i in np.flatnonzero(m):
                w.writerow([int(i), name])


def write_graph_files(g: AttributedGraph, directory, label: str = "label") -> dict:
    """Write ``features.csv``, ``edges.txt`` and ``masks.csv`` readable by
    :func:`load_graph_files`. Returns the three paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = list(g.feature_names or (f"x{i}" for i in range(g.num_features)))
    paths = {"features": d / "features.csv", "edges": d / "edges.txt", "masks": d / "masks.csv"}
    with open(paths["features"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [label])
        for row, y in zip(g.features, g.labels):
            w.writerow([repr(float(v)) for v in row] + [int(y)])
    with open(paths["edges"], "w") as fh:
        fh.writelines(f"{i} {j}\n" for i, j in g.edges())
    write_mask_file(paths["masks"], g)
    return paths


def normalize_features(x: np.ndarray, sensitive_col: int, mode: str = "minmax") -> np.ndarray:
    """Scale every column except the sensitive one to [-1, 1] (``minmax``)
    or leave it untouched (``none``). Constant columns map to 0."""
    if mode == "none":
        return x
    if mode != "minmax":
        raise InvalidParameter(f"unknown feature normalization {mode!r}")
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, 2.0 * (x - lo) / safe - 1.0, 0.0)
    out[:, sensitive_col] = x[:, sensitive_col]
    return out


def load_graph_files(feature_path, edge_path, sensitive: str, label: str, mask_path=None,
                     split: Optional[SplitSpec] = None, feature_norm: str = "minmax", drop=(),
                     value_maps: Optional[dict] = None) -> AttributedGraph:
    x, names, y, s_col = read_feature_csv(feature_path, sensitive, label, drop, value_maps)
    edges = read_edge_file(edge_path)
    if mask_path is not None:
        split = SplitSpec(masks=read_mask_file(mask_path, len(y)))
    x = normalize_features(x, s_col, feature_norm)
    return build_graph(x, edges, s_col, y, split or SplitSpec(), feature_names=names)


def bundled_data_dir() -> Path:
    return Path(str(resources.files("grafair") / "datasets"))


def _dataset_dir(name: str, root) -> Path:
    if root is not None:
        base = Path(root)
        return base / name if (base / name).is_dir() else base
    env = os.environ.get("GRAFAIR_DATA")
    if env:
        return Path(env) / name
    return bundled_data_dir() / name


def load_dataset(name: str, root=None, split: Optional[SplitSpec] = None, mask_path=None,
                 feature_norm: str = "minmax") -> AttributedGraph:
    """Load one of the benchmark graphs (german, credit, bail).

    Files are looked up in ``root`` (or ``root/<name>``), then
    ``$GRAFAIR_DATA/<name>``, then the copies shipped with the package.
    Size mismatches against the published statistics are logged as
    warnings; files in the wild differ slightly.
    """
    if name not in DATASETS:
        raise InvalidParameter(f"unknown dataset {name!r}; expected one of {sorted(DATASETS)}")
    info = DATASETS[name]
    d = _dataset_dir(name, root)
    g = load_graph_files(d / info.feature_file, d / info.edge_file, info.sensitive, info.label,
                         mask_path=mask_path, split=split, feature_norm=feature_norm, drop=info.drop,
                         value_maps=info.value_maps)
    for what, got, want in (("nodes", g.n, info.nodes), ("features", g.num_features, info.features),
                            ("edges", g.num_edges, info.edges)):
        if got != want:
            log.warning("%s: %d %s, published statistics say %d", name, got, what, want)
    return g


def synth_biased_graph(n: int, homophily: float, bias_strength: float, seed: int, avg_degree: float = 10.0,
                       num_features: int = 8, signal: float = 1.0, proxy_strength: float = 1.0,
                       split: Optional[SplitSpec] = None) -> AttributedGraph:
    """Two-group graph with planted sensitive-attribute bias.

    * ``s`` ~ Bernoulli(0.5).
    * Edges: same-group pairs connect with probability proportional to
      ``homophily``, cross-group pairs to ``1 - homophily``, scaled so the
      expected mean degree is ``avg_degree``.
    * Labels: with probability ``bias_strength`` a node's label is copied
      from ``s``; otherwise it is a fair coin, independent of ``s``.
    * Features: column 0 is ``s``. One column carries ``s`` plus noise
      (scaled by ``proxy_strength``); the rest carry the label, ``signal *
      (2y - 1)``, plus unit Gaussian noise.
    """
    if n < 10:
        raise InvalidParameter(f"n must be >= 10, got {n}")
    if not 0.0 <= homophily <= 1.0:
        raise InvalidParameter(f"homophily must lie in [0, 1], got {homophily}")
    if not 0.0 <= bias_strength <= 1.0:
        raise InvalidParameter(f"bias_strength must lie in [0, 1], got {bias_strength}")
    if num_features < 3:
        raise InvalidParameter("need at least 3 feature columns")
    rng = np.random.default_rng(seed)
    s = (rng.random(n) < 0.5).astype(np.int64)
    biased = rng.random(n) < bias_strength
    y = np.where(biased, s, (rng.random(n) < 0.5).astype(np.int64))

    scale = 2.0 * avg_degree / n
    iu, ju = np.triu_indices(n, k=1)
    same = s[iu] == s[ju]
    p = np.where(same, homophily, 1.0 - homophily) * scale
    keep = rng.random(len(iu)) < np.minimum(p, 1.0)
    edges = np.stack([iu[keep], ju[keep]], axis=1)

    x = rng.standard_normal((n, num_features))
    x[:, 0] = s
    x[:, 1] = proxy_strength * (2 * s - 1) + x[:, 1]
    x[:, 2:] += signal * (2 * y - 1)[:, None]
    names = ("s", "proxy") + tuple(f"x{i}" for i in range(num_features - 2))
    return build_graph(x, edges, 0, y, split or SplitSpec(seed=seed), feature_names=names)
