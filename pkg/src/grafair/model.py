"""Variational graph encoder with a sensitive-attribute-aware decoder.

Each encoder layer transforms node states, aggregates them over the
neighborhood, and splits the result into a mean half and a variance half
(variance = softplus of the second half). A sample mu + sigma * eps feeds
the next layer. The decoder is a softmax classifier over the final
representation, optionally concatenated with the one-hot sensitive
attribute.
"""
from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import InvalidParameter, ShapeMismatch, UnknownVariant
from .graph import AttributedGraph, NormalizedAdjacency

NUM_CLASSES = 2
# keeps log(variance) finite when softplus underflows
VAR_FLOOR = 1e-10


class Variant(str, Enum):
    FULL = "full"
    NO_KL = "no-kl"                  # KL term dropped
    NO_S_CONCAT = "no-s-concat"      # decoder never sees S
    DETERMINISTIC = "deterministic"  # plain auto-encoder: no sampling, no KL
    VANILLA = "vanilla"              # deterministic GCN classifier
    VANILLA_WO_S = "vanilla-wo-s"    # vanilla with the sensitive column zeroed

    @classmethod
    def parse(cls, v) -> "Variant":
        if isinstance(v, cls):
            return v
        try:
            return cls(str(v))
        except ValueError:
            raise UnknownVariant(f"unknown variant {v!r}; expected one of {[m.value for m in cls]}") from None

    @property
    def concat_s(self) -> bool:
        return self in (Variant.FULL, Variant.NO_KL, Variant.DETERMINISTIC)

    @property
    def uses_kl(self) -> bool:
        return self in (Variant.FULL, Variant.NO_S_CONCAT)

    @property
    def stochastic(self) -> bool:
        return self in (Variant.FULL, Variant.NO_KL, Variant.NO_S_CONCAT)

    @property
    def hides_sensitive_input(self) -> bool:
        return self is Variant.VANILLA_WO_S


ALL_VARIANTS = tuple(Variant)


@dataclass
class ModelDims:
    in_features: int
    hidden_dim: int = 20
    encoder_layers: int = 1
    classifier_layers: int = 1
    num_classes: int = NUM_CLASSES


@dataclass
class GrafairModel:
    """Weights plus the architectural switches that interpret them.

    ``params`` maps names to arrays: ``enc{l}`` for encoder layer ``l``
    (shape fan_in x 2*hidden_dim, no bias) and ``dec{k}.W`` / ``dec{k}.b``
    for classifier layer ``k``.
    """

    params: dict
    dims: ModelDims
    variant: Variant = Variant.FULL
    sample_final_only: bool = False

    @property
    def hidden_dim(self) -> int:
        return self.dims.hidden_dim

    @property
    def encoder_weights(self) -> list:
        return [self.params[f"enc{l}"] for l in range(self.dims.encoder_layers)]

    @property
    def decoder_weights(self) -> list:
        return [(self.params[f"dec{k}.W"], self.params[f"dec{k}.b"]) for k in range(self.dims.classifier_layers)]

    @property
    def decoder_in_width(self) -> int:
        return self.hidden_dim + (2 if self.variant.concat_s else 0)

    def copy(self) -> "GrafairModel":
        return GrafairModel({k: v.copy() for k, v in self.params.items()}, ModelDims(**vars(self.dims)),
                            self.variant, self.sample_final_only)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_weights(dims: ModelDims, rng_seed: int, variant=Variant.FULL, sample_final_only: bool = False) -> GrafairModel:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    variant = Variant.parse(variant)
    if dims.encoder_layers not in (1, 2, 3):
        raise InvalidParameter(f"encoder_layers must be 1, 2 or 3, got {dims.encoder_layers}")
    if dims.classifier_layers not in (1, 2):
        raise InvalidParameter(f"classifier_layers must be 1 or 2, got {dims.classifier_layers}")
    if dims.in_features < 1 or dims.hidden_dim < 1:
        raise InvalidParameter(f"bad dimensions {dims}")
    rng = np.random.default_rng(rng_seed)
    f = dims.hidden_dim
    params = {}
    fan_in = dims.in_features
    for l in range(dims.encoder_layers):
        params[f"enc{l}"] = _glorot(rng, fan_in, 2 * f)
        fan_in = f
    width = f + (2 if variant.concat_s else 0)
    for k in range(dims.classifier_layers):
        out = dims.num_classes if k == dims.classifier_layers - 1 else f
        params[f"dec{k}.W"] = _glorot(rng, width, out)
        params[f"dec{k}.b"] = np.zeros((1, out))
        width = out
    return GrafairModel(params, dims, variant, sample_final_only)


@dataclass
class EncodedPosterior:
    """Final-layer Gaussian posterior per node and the sample drawn from it.

    ``z == mu + exp(0.5 * log_var) * epsilon`` holds exactly; ``epsilon`` is
    all zeros when no sample was drawn.
    """

    mu: np.ndarray
    log_var: np.ndarray
    z: np.ndarray
    epsilon: np.ndarray


@dataclass
class ForwardPass:
    """Differentiable intermediates of one forward pass."""

    mu: ad.Value
    var: ad.Value
    log_var: ad.Value
    z: ad.Value
    probs: ad.Value
    epsilon: np.ndarray
    layer_eps: list = field(default_factory=list)

    def posterior(self) -> EncodedPosterior:
        return EncodedPosterior(self.mu.data.copy(), self.log_var.data.copy(), self.z.data.copy(), self.epsilon.copy())


def encoder_input(model: GrafairModel, g: AttributedGraph) -> np.ndarray:
    x = g.features
    if model.variant.hides_sensitive_input:
        x = x.copy()
        x[:, g.sensitive_col] = 0.0
    return x


def one_hot_sensitive(sensitive) -> np.ndarray:
    s = np.asarray(sensitive, dtype=np.float64).ravel()
    return np.stack([1.0 - s, s], axis=1)


def _as_values(model: GrafairModel, params: Optional[dict]) -> dict:
    if params is not None:
        return params
    return {k: ad.constant(v) for k, v in model.params.items()}


def encode_values(model: GrafairModel, x: np.ndarray, adj: NormalizedAdjacency, sample: bool,
                  rng: Optional[np.random.Generator], params: Optional[dict] = None):
    """Run the encoder on the tape. Returns (mu, var, log_var, z, eps_list)
    for the final layer; ``eps_list`` holds the noise of every layer."""
    p = _as_values(model, params)
    f = model.hidden_dim
    if x.shape[1] != model.dims.in_features:
        raise ShapeMismatch(f"features have {x.shape[1]} columns, model expects {model.dims.in_features}")
    if adj.n != x.shape[0]:
        raise ShapeMismatch(f"adjacency is {adj.n}x{adj.n} but there are {x.shape[0]} nodes")
    draw = sample and model.variant.stochastic
    if draw and rng is None:
        raise InvalidParameter("sampling requires an rng")
    h = ad.constant(x)
    eps_list = []
    L = model.dims.encoder_layers
    for l in range(L):
        agg = ad.sparse_matmul(adj, ad.matmul(h, p[f"enc{l}"]))
        mu = ad.col_slice(agg, 0, f)
        var = ad.clip_min(ad.softplus(ad.col_slice(agg, f, 2 * f)), VAR_FLOOR)
        log_var = ad.log(var)
        if draw and (l == L - 1 or not model.sample_final_only):
            eps = rng.standard_normal(mu.shape)
            sigma = ad.exp(ad.scalar_mul(0.5, log_var))
            z = ad.add(mu, ad.elementwise_mul(sigma, ad.constant(eps)))
        else:
            eps = np.zeros(mu.shape)
            z = mu
        eps_list.append(eps)
        h = z
    return mu, var, log_var, h, eps_list


def decode_values(model: GrafairModel, z: ad.Value, sensitive, params: Optional[dict] = None) -> ad.Value:
    p = _as_values(model, params)
    s = np.asarray(sensitive)
    if s.shape != (z.shape[0],):
        raise ShapeMismatch(f"sensitive has shape {s.shape}, expected ({z.shape[0]},)")
    h = ad.concat_cols(z, ad.constant(one_hot_sensitive(s))) if model.variant.concat_s else z
    K = model.dims.classifier_layers
    for k in range(K):
        h = ad.add(ad.matmul(h, p[f"dec{k}.W"]), p[f"dec{k}.b"])
        if k < K - 1:
            h = ad.relu(h)
    return ad.softmax_rows(h)


def forward(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, sample: bool,
            rng: Optional[np.random.Generator] = None, params: Optional[dict] = None,
            sensitive=None) -> ForwardPass:
    x = encoder_input(model, g)
    mu, var, log_var, z, eps_list = encode_values(model, x, adj, sample, rng, params)
    probs = decode_values(model, z, g.sensitive if sensitive is None else sensitive, params)
    return ForwardPass(mu, var, log_var, z, probs, eps_list[-1], eps_list)


def encode(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency, sample: bool = False,
           rng_seed: Optional[int] = None) -> EncodedPosterior:
    rng = np.random.default_rng(rng_seed) if sample else None
    mu, _, log_var, z, eps_list = encode_values(model, encoder_input(model, g), adj, sample, rng)
    return EncodedPosterior(mu.data.copy(), log_var.data.copy(), z.data.copy(), eps_list[-1])


def decode(model: GrafairModel, posterior: EncodedPosterior, sensitive) -> np.ndarray:
    return decode_values(model, ad.constant(posterior.z), sensitive).data


def predict_proba(model: GrafairModel, g: AttributedGraph, adj: NormalizedAdjacency,
                  s_mode: str = "observed", s_prior: Optional[float] = None) -> np.ndarray:
    """Class probabilities with sampling off (z = mu).

    ``s_mode="observed"`` feeds each node's own sensitive value to the
    decoder. ``"marginal"`` averages the decoder over s in {0, 1} weighted by
    ``s_prior`` = P(s=1) (default: training-node frequency), so predictions
    depend on S only through the encoder input. Variants whose decoder
    ignores S give identical results in both modes.
    """
    post = encode(model, g, adj, sample=False)
    if s_mode == "observed" or not model.variant.concat_s:
        return decode(model, post, g.sensitive)
    if s_mode != "marginal":
        raise InvalidParameter(f"unknown s_mode {s_mode!r}")
    if s_prior is None:
        s_prior = float(g.sensitive[g.train_mask].mean()) if g.train_mask.any() else 0.5
    p1 = decode(model, post, np.ones(g.n, dtype=np.int64))
    p0 = decode(model, post, np.zeros(g.n, dtype=np.int64))
    return s_prior * p1 + (1.0 - s_prior) * p0


def predict_labels(prob: np.ndarray) -> np.ndarray:
    """Row-wise argmax; exact ties go to class 0."""
    return np.argmax(np.asarray(prob), axis=1).astype(np.int64)


# -- checkpoints -----------------------------------------------------------

CHECKPOINT_FORMAT = "grafair-checkpoint-v1"


def save_model(model: GrafairModel, path) -> None:
    """Write an ``.npz`` archive: one array per parameter (key ``param/<name>``)
    plus a ``meta`` entry holding JSON with the format tag, variant and dims."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "variant": model.variant.value,
        "dims": vars(model.dims),
        "sample_final_only": model.sample_final_only,
        "param_names": list(model.params),
    }
    arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
    arrays.update({f"param/{k}": v for k, v in model.params.items()})
    # fixed zip timestamps keep repeated saves byte-identical
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            with zf.open(zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)), "w") as fh:
                np.lib.format.write_array(fh, np.asarray(arr), allow_pickle=False)


def load_model(path) -> GrafairModel:
    path = Path(path)
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise InvalidParameter(f"{path}: not a {CHECKPOINT_FORMAT} file")
        params = {k: np.array(z[f"param/{k}"]) for k in meta["param_names"]}
    return GrafairModel(params, ModelDims(**meta["dims"]), Variant.parse(meta["variant"]),
                        bool(meta["sample_final_only"]))
