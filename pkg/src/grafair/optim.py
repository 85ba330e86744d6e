"""Adam with bias correction, written against dicts of named arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> tuple:
    """One Adam update. Returns ``(new_params, state)``; ``params`` is not
    modified, ``state`` is advanced in place."""
    for k, g in grads.items():
        if g.shape != params[k].shape:
            raise ShapeMismatch(f"gradient for {k!r} has shape {g.shape}, parameter has {params[k].shape}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    new = {}
    for k, p in params.items():
        g = grads.get(k)
        if g is None:
            g = np.zeros_like(p)
        m = state.m.get(k)
        if m is None:
            m = state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        v = state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        new[k] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return new, state
