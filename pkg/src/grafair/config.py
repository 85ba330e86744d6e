"""Training configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import InvalidParameter, MissingFile, ParseError
from .model import Variant

AGGREGATIONS = ("gcn", "mean", "sum", "sampled")
S_MODES = ("observed", "marginal", "retrain")
LR_GRID = (0.001, 0.005, 0.01)
EPOCH_GRID = (100, 200, 300)
BETA_GRID = (100.0, 500.0, 1000.0)


@dataclass
class TrainConfig:
    beta: float = 1000.0
    lr: float = 0.01
    epochs: int = 200
    hidden_dim: int = 20
    encoder_layers: int = 1
    classifier_layers: int = 1
    variant: str = "full"
    seeds: tuple = (0, 1, 2, 3, 4)
    aggregation: str = "gcn"
    neighbor_samples: int = 10
    sample_final_only: bool = False
    noise_std: float = 1.0
    rs_trials: int = 5
    s_mode: str = "observed"
    dataset: str = "german"
    data_root: Optional[str] = None
    features_path: Optional[str] = None
    edges_path: Optional[str] = None
    masks_path: Optional[str] = None
    sensitive_column: Optional[str] = None
    label_column: Optional[str] = None
    feature_norm: str = "minmax"
    split_seed: int = 0
    split_ratios: tuple = (0.5, 0.25, 0.25)
    workers: int = 1

    def __post_init__(self):
        # normalize numeric types so equal configs hash equally (500 vs 500.0)
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(f.default, bool):
                setattr(self, f.name, bool(v))
            elif isinstance(f.default, float):
                setattr(self, f.name, float(v))
            elif isinstance(f.default, int):
                setattr(self, f.name, int(v))
        self.seeds = tuple(int(s) for s in self.seeds)
        self.split_ratios = tuple(float(r) for r in self.split_ratios)
        self.validate()

    def validate(self) -> None:
        Variant.parse(self.variant)
        if self.beta < 1:
            raise InvalidParameter(f"beta must be >= 1, got {self.beta}")
        if self.lr <= 0:
            raise InvalidParameter(f"lr must be positive, got {self.lr}")
        if self.epochs < 0:
            raise InvalidParameter(f"epochs must be >= 0, got {self.epochs}")
        if self.encoder_layers not in (1, 2, 3) or self.classifier_layers not in (1, 2):
            raise InvalidParameter("encoder_layers must be in 1..3 and classifier_layers in 1..2")
        if self.aggregation not in AGGREGATIONS:
            raise InvalidParameter(f"aggregation must be one of {AGGREGATIONS}")
        if self.s_mode not in S_MODES:
            raise InvalidParameter(f"s_mode must be one of {S_MODES}")
        if not self.seeds:
            raise InvalidParameter("need at least one seed")
        if self.noise_std < 0 or self.rs_trials < 1 or self.neighbor_samples < 1 or self.workers < 1:
            raise InvalidParameter("noise_std must be >= 0; rs_trials, neighbor_samples, workers >= 1")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        d["split_ratios"] = list(self.split_ratios)
        return d

    def digest(self) -> str:
        """Short stable hash of every field; names output directories."""
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _field_types() -> dict:
    return {f.name: f for f in fields(TrainConfig)}


def coerce(name: str, text: str):
    """Convert a string to the type of TrainConfig field ``name``."""
    spec = _field_types().get(name)
    if spec is None:
        raise InvalidParameter(f"unknown config key {name!r}")
    text = text.strip()
    default = spec.default if spec.default is not dataclasses.MISSING else None
    if name in ("seeds", "split_ratios"):
        cast = int if name == "seeds" else float
        return tuple(cast(p) for p in text.replace(",", " ").split())
    if text.lower() in ("none", "") and default is None:
        return None
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise InvalidParameter(f"{name}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def read_config(path) -> TrainConfig:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path} does not exist")
    values = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(path, line_no, f"expected key = value, got {text!r}")
        key, val = (p.strip() for p in text.split("=", 1))
        try:
            values[key] = coerce(key, val)
        except (InvalidParameter, ValueError) as exc:
            raise ParseError(path, line_no, str(exc)) from None
    return TrainConfig(**values)


def write_config(cfg: TrainConfig, path) -> None:
    lines = []
    for k, v in cfg.as_dict().items():
        if isinstance(v, list):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")
