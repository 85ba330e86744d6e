"""Small reverse-mode differentiation engine over float64 matrices.

Every :class:`Value` holds a 2-D array. Operations build a DAG of Values;
:func:`backward` walks it in reverse topological order and accumulates
``grad`` into every leaf Value that requires it. Broadcasting is limited to
scalar * matrix and adding a (1, c) row to every row of an (n, c) matrix.

Gradients accumulate across calls to :func:`backward`; call
:meth:`Value.zero_grad` (or build a fresh graph) between steps.
"""
from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import NonScalarRoot, ShapeMismatch


class Value:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = "",
                 parents: tuple = (), backward_fn: Optional[Callable] = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeMismatch(f"Value must be 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise NonScalarRoot(f"item() needs a 1x1 Value, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Value{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; the named functions below are the real API
    def __add__(self, other):
        return add(self, _lift(other, self.shape))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scalar_mul(-1.0, _lift(other, self.shape)))

    def __rsub__(self, other):
        return add(_lift(other, self.shape), scalar_mul(-1.0, self))

    def __mul__(self, other):
        if np.isscalar(other):
            return scalar_mul(float(other), self)
        return elementwise_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(-1.0, self)

    def __matmul__(self, other):
        return matmul(self, other)


def _lift(x, shape) -> Value:
    if isinstance(x, Value):
        return x
    return Value(np.full(shape, float(x)) if np.isscalar(x) else x)


def constant(x) -> Value:
    """Wrap an array as a leaf that never receives gradient."""
    return Value(x, requires_grad=False)


def parameter(x, name: str = "") -> Value:
    return Value(np.array(x, dtype=np.float64, copy=True), requires_grad=True, name=name)


def _same_shape(a: Value, b: Value, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ")


# -- linear algebra --------------------------------------------------------

def matmul(a: Value, b: Value) -> Value:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    out = Value(a.data @ b.data, parents=(a, b))

    def back(g):
        return g @ b.data.T, a.data.T @ g

    out.backward_fn = back
    return out


def sparse_matmul(adj, x: Value) -> Value:
    """``adj @ x`` for a constant sparse matrix (or NormalizedAdjacency)."""
    m = getattr(adj, "matrix", adj)
    if not sp.issparse(m):
        m = sp.csr_matrix(m)
    if m.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"sparse_matmul: {m.shape} @ {x.shape}")
    m = m.tocsr()
    out = Value(np.asarray(m @ x.data), parents=(x,))

    def back(g):
        return (np.asarray(m.T @ g),)

    out.backward_fn = back
    return out


def add(a: Value, b: Value) -> Value:
    """Elementwise sum; ``b`` may also be a (1, c) row added to every row."""
    if a.shape == b.shape:
        out = Value(a.data + b.data, parents=(a, b))

        def back(g):
            return g, g
    elif b.shape == (1, a.shape[1]):
        out = Value(a.data + b.data, parents=(a, b))

        def back(g):
            return g, g.sum(axis=0, keepdims=True)
    else:
        raise ShapeMismatch(f"add: shapes {a.shape} and {b.shape} are incompatible")
    out.backward_fn = back
    return out


def concat_cols(a: Value, b: Value) -> Value:
    if a.shape[0] != b.shape[0]:
        raise ShapeMismatch(f"concat_cols: row counts {a.shape} vs {b.shape}")
    k = a.shape[1]
    out = Value(np.hstack([a.data, b.data]), parents=(a, b))

    def back(g):
        return g[:, :k], g[:, k:]

    out.backward_fn = back
    return out


def col_slice(x: Value, start: int, stop: int) -> Value:
    if not 0 <= start < stop <= x.shape[1]:
        raise ShapeMismatch(f"col_slice [{start}:{stop}] out of range for {x.shape}")
    out = Value(x.data[:, start:stop], parents=(x,))

    def back(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        return (full,)

    out.backward_fn = back
    return out


def row_gather(x: Value, indices) -> Value:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < -x.shape[0] or idx.max() >= x.shape[0]):
        raise ShapeMismatch(f"row_gather: index out of range for {x.shape}")
    out = Value(x.data[idx], parents=(x,))

    def back(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        return (full,)

    out.backward_fn = back
    return out


# -- elementwise -----------------------------------------------------------

def elementwise_mul(a: Value, b: Value) -> Value:
    _same_shape(a, b, "elementwise_mul")
    out = Value(a.data * b.data, parents=(a, b))

    def back(g):
        return g * b.data, g * a.data

    out.backward_fn = back
    return out


def scalar_mul(c: float, x: Value) -> Value:
    c = float(c)
    out = Value(c * x.data, parents=(x,))
    out.backward_fn = lambda g: (c * g,)
    return out


def softplus(x: Value) -> Value:
    d = x.data
    out = Value(np.maximum(d, 0.0) + np.log1p(np.exp(-np.abs(d))), parents=(x,))

    def back(g):
        # d/dx softplus = sigmoid(x), evaluated without overflow
        e = np.exp(-np.abs(d))
        sig = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return (g * sig,)

    out.backward_fn = back
    return out


def relu(x: Value) -> Value:
    mask = x.data > 0
    out = Value(np.where(mask, x.data, 0.0), parents=(x,))
    out.backward_fn = lambda g: (g * mask,)
    return out


def log(x: Value) -> Value:
    d = x.data
    out = Value(np.log(d), parents=(x,))
    out.backward_fn = lambda g: (g / d,)
    return out


def exp(x: Value) -> Value:
    e = np.exp(x.data)
    out = Value(e, parents=(x,))
    out.backward_fn = lambda g: (g * e,)
    return out


def sqrt(x: Value) -> Value:
    r = np.sqrt(x.data)
    out = Value(r, parents=(x,))
    out.backward_fn = lambda g: (g * 0.5 / r,)
    return out


def square(x: Value) -> Value:
    d = x.data
    out = Value(d * d, parents=(x,))
    out.backward_fn = lambda g: (2.0 * d * g,)
    return out


def clip_min(x: Value, floor: float) -> Value:
    """max(x, floor); no gradient flows where the floor is active."""
    keep = ~(x.data < floor)  # NaN passes through
    out = Value(np.where(keep, x.data, floor), parents=(x,))
    out.backward_fn = lambda g: (g * keep,)
    return out


def softmax_rows(x: Value) -> Value:
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    out = Value(s, parents=(x,))

    def back(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    out.backward_fn = back
    return out


# -- reductions ------------------------------------------------------------

def sum_all(x: Value) -> Value:
    out = Value(x.data.sum(), parents=(x,))
    out.backward_fn = lambda g: (np.full_like(x.data, g[0, 0]),)
    return out


def mean_all(x: Value) -> Value:
    size = x.data.size
    out = Value(x.data.mean(), parents=(x,))
    out.backward_fn = lambda g: (np.full_like(x.data, g[0, 0] / size),)
    return out


# -- driving the graph -----------------------------------------------------

class Tape:
    """Topologically ordered Values reachable from a root."""

    def __init__(self, order: list):
        self.order = order

    @classmethod
    def from_root(cls, root: Value) -> "Tape":
        order, seen = [], set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def leaves(self) -> list:
        return [v for v in self.order if not v.parents and v.requires_grad]


def backward(root: Value, tape: Optional[Tape] = None) -> Tape:
    """Accumulate d(root)/d(leaf) into ``leaf.grad`` for every leaf on the
    tape that requires gradient. ``root`` must be 1x1."""
    if root.shape != (1, 1):
        raise NonScalarRoot(f"backward needs a scalar (1x1) root, got {root.shape}")
    tape = tape or Tape.from_root(root)
    upstream = {id(root): np.ones((1, 1))}
    for node in reversed(tape.order):
        g = upstream.pop(id(node), None)
        if g is None or not node.requires_grad:
            continue
        if not node.parents:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for p, pg in zip(node.parents, node.backward_fn(g)):
            if not p.requires_grad:
                continue
            prev = upstream.get(id(p))
            upstream[id(p)] = pg if prev is None else prev + pg
    return tape


def grad_of(fn: Callable[..., Value], arrays: Iterable[np.ndarray]) -> tuple:
    """Evaluate ``fn`` on fresh parameters built from ``arrays``; return the
    scalar value and the gradient w.r.t. each array."""
    params = [parameter(a) for a in arrays]
    out = fn(*params)
    backward(out)
    grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    return out.item(), grads


def finite_diff_check(f: Callable[..., Value], params: Iterable[np.ndarray], eps: float = 1e-5) -> float:
    """Max relative error between backward() and central differences.

    ``f`` maps Values (one per array in ``params``) to a 1x1 Value. The
    relative error of each entry uses max(|analytic|, |numeric|, 1e-8) as
    denominator.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    arrays = [np.array(p, dtype=np.float64, copy=True).reshape(Value(p).shape) for p in params]
    _, analytic = grad_of(f, arrays)

    def evaluate(arrs):
        return f(*[constant(a) for a in arrs]).item()

    worst = 0.0
    for k, a in enumerate(arrays):
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = a[i]
            a[i] = orig + eps
            up = evaluate(arrays)
            a[i] = orig - eps
            down = evaluate(arrays)
            a[i] = orig
            numeric = (up - down) / (2 * eps)
            an = analytic[k][i]
            denom = max(abs(an), abs(numeric), 1e-8)
            worst = max(worst, abs(an - numeric) / denom)
    return worst
