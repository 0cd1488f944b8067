"""Dense float64 tensors with tape-based reverse-mode differentiation.

Only the operations the GRU encoder-decoder and the CNN classifier need are
provided. Every op checks its output for NaN/Inf and raises
:class:`~selftrain_nlg.errors.NumericalError` instead of propagating it.
"""

from __future__ import annotations

import contextlib

import numpy as np

from ..errors import ConfigError, NumericalError

_GRAD_ENABLED = True
NEG_INF = -1e30  # additive mask; exp() of it underflows to exactly 0


@contextlib.contextmanager
def no_grad():
    """Run ops without recording the tape (inference)."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._parents: tuple = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}{', grad' if self.requires_grad else ''})"

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into every leaf's ``.grad``."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad += g
                continue
            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


def tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check(out: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(out).all():
        raise NumericalError(f"non-finite values produced by {op}")
    return out


def _node(data, parents, backward, op) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = _check(data, op)
    t.grad = None
    t.name = op
    needs = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    t.requires_grad = needs
    if needs:
        t._parents = tuple(parents)
        t._backward = backward
    else:
        t._parents = ()
        t._backward = None
    return t


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# elementwise ------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)), "sub")


def mul(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)), "mul")


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _node(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    return _node(t, (a,), lambda g: (g * (1.0 - t * t),), "tanh")


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0
    return _node(a.data * pos, (a,), lambda g: (g * pos,), "relu")


def square(a: Tensor) -> Tensor:
    return _node(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,), "square")


# linear algebra ---------------------------------------------------------

def matmul(a, b) -> Tensor:
    """``a @ b`` for ``a`` of shape (..., n) and a matrix ``b`` of shape (n, m)."""
    a, b = tensor(a), tensor(b)
    if b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def back(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, b.shape[1])
        return ga, gb

    return _node(out, (a, b), back, "matmul")


def weighted_sum(w: Tensor, v: Tensor) -> Tensor:
    """Batched convex combination: ``out[b] = sum_l w[b, l] * v[b, l, :]``."""
    out = np.einsum("bl,blh->bh", w.data, v.data)

    def back(g):
        return np.einsum("bh,blh->bl", g, v.data), w.data[:, :, None] * g[:, None, :]

    return _node(out, (w, v), back, "weighted_sum")


# shape ------------------------------------------------------------------

def getitem(a: Tensor, key) -> Tensor:
    out = a.data[key]

    basic = all(isinstance(k, (slice, int, type(Ellipsis))) for k in (key if isinstance(key, tuple) else (key,)))

    def back(g):
        full = np.zeros_like(a.data)
        if basic:
            full[key] += g
        else:
            np.add.at(full, key, g)
        return (full,)

    return _node(np.array(out, dtype=np.float64), (a,), back, "getitem")


def reshape(a: Tensor, shape) -> Tensor:
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def concat(ts, axis: int = -1) -> Tensor:
    ts = [tensor(t) for t in ts]
    out = np.concatenate([t.data for t in ts], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _node(out, ts, back, "concat")


def stack(ts, axis: int = 0) -> Tensor:
    ts = [tensor(t) for t in ts]
    out = np.stack([t.data for t in ts], axis=axis)

    def back(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _node(out, ts, back, "stack")


def take(weight: Tensor, idx) -> Tensor:
    """Row lookup (embedding): ``weight[idx]`` for an integer index array."""
    idx = np.asarray(idx, dtype=np.int64)
    out = weight.data[idx]

    def back(g):
        full = np.zeros_like(weight.data)
        np.add.at(full, idx, g)
        return (full,)

    return _node(out, (weight,), back, "take")


# reductions -------------------------------------------------------------

def reduce_sum(a: Tensor, axis=None) -> Tensor:
    out = a.data.sum(axis=axis)

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(np.asarray(out), (a,), back, "sum")


def masked_max(a: Tensor, mask, axis: int = 1) -> Tensor:
    """Max over ``axis`` ignoring positions where ``mask`` is False; gradient flows to the argmax."""
    mask = np.asarray(mask, dtype=bool)
    m = np.expand_dims(mask, -1) if mask.ndim < a.ndim else mask
    filled = np.where(m, a.data, -np.inf)
    arg = np.argmax(filled, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(arg, axis), axis=axis).squeeze(axis)

    def back(g):
        full = np.zeros_like(a.data)
        np.put_along_axis(full, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis=axis)
        return (full,)

    return _node(out, (a,), back, "masked_max")


# probability ------------------------------------------------------------

def softmax_np(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax_np(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    s = softmax_np(a.data, axis)

    def back(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _node(s, (a,), back, "softmax")


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    ls = log_softmax_np(a.data, axis)

    def back(g):
        return (g - np.exp(ls) * g.sum(axis=axis, keepdims=True),)

    return _node(ls, (a,), back, "log_softmax")


def cross_entropy(logits: Tensor, target, weights=None) -> Tensor:
    """Summed negative log-likelihood ``-sum_i w_i log softmax(logits_i)[target_i]``.

    ``logits`` is a vector with an integer ``target`` or a (B, V) matrix with a
    (B,) target array; ``weights`` (B,) masks padded positions.
    """
    single = logits.ndim == 1
    x = logits.data[None, :] if single else logits.data
    t = np.atleast_1d(np.asarray(target, dtype=np.int64))
    V = x.shape[1]
    if t.shape[0] != x.shape[0]:
        raise ValueError("cross_entropy: one target per row required")
    if (t < 0).any() or (t >= V).any():
        raise IndexError(f"cross_entropy target out of range for vocabulary of size {V}")
    w = np.ones(x.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    ls = log_softmax_np(x, axis=1)
    rows = np.arange(x.shape[0])
    loss = -(w * ls[rows, t]).sum()

    def back(g):
        p = np.exp(ls)
        p[rows, t] -= 1.0
        gx = g * w[:, None] * p
        return (gx[0] if single else gx,)

    return _node(np.asarray(loss), (logits,), back, "cross_entropy")


def dropout(a: Tensor, rate: float, training: bool, rng=None) -> Tensor:
    """Inverted dropout: zero each element with probability ``rate``, scale survivors by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return _node(a.data * keep, (a,), lambda g: (g * keep,), "dropout")
