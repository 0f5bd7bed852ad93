"""Reverse-mode automatic differentiation on float32 numpy arrays.

A Tensor wraps an ndarray and, when gradients are enabled, remembers the
operation that produced it. ``backward(loss)`` walks the graph once in
reverse topological order and accumulates ``.grad`` buffers on every tensor
reachable from the loss that has ``requires_grad`` set.

Gradients accumulate across calls; use ``zero_grads`` between steps.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

DTYPE = np.float32

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (rollouts, evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


@contextlib.contextmanager
def using_dtype(dt):
    """Run the block at a different float width (float64 for test oracles)."""
    global DTYPE
    prev = DTYPE
    DTYPE = np.dtype(dt).type
    try:
        yield
    finally:
        DTYPE = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.astype(DTYPE, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'yes' if self.grad is not None else 'no'})"

    # operator sugar; constants wrap as non-grad tensors
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

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return tslice(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)


TensorLike = Union[Tensor, np.ndarray, float, int]


def as_tensor(x: TensorLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to ``shape`` by summing broadcast axes."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    track = _grad_enabled and any(p.requires_grad or p._parents for p in parents)
    if track:
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents)
        out._backward = backward
    return out


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), bwd)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        a.accumulate(_unbroadcast(g, a.data.shape))
        b.accumulate(_unbroadcast(-g, b.data.shape))

    return _make(a.data - b.data, (a, b), bwd)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), bwd)


def div(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        a.accumulate(_unbroadcast(g / b.data, a.data.shape))
        b.accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(a.data / b.data, (a, b), bwd)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        a.accumulate(_unbroadcast(ga, a.data.shape))
        b.accumulate(_unbroadcast(gb, b.data.shape))

    return _make(a.data @ b.data, (a, b), bwd)


def linear(x: TensorLike, w: Tensor, b: Tensor) -> Tensor:
    """Fused x @ w + bias; one graph node instead of two."""
    x = as_tensor(x)
    xd = x.data
    flat = xd.reshape(-1, xd.shape[-1]) if xd.ndim > 2 else xd

    def bwd(g):
        gf = g.reshape(-1, g.shape[-1]) if g.ndim > 2 else g
        x.accumulate((gf @ w.data.T).reshape(xd.shape))
        w.accumulate(flat.T @ gf)
        b.accumulate(gf.sum(axis=0, dtype=DTYPE))

    return _make(xd @ w.data + b.data, (x, w, b), bwd)


def power(a: TensorLike, p: float) -> Tensor:
    a = as_tensor(a)
    # integer float powers go through numpy's slow generic pow; special-case
    if p == 2:
        out_data = a.data * a.data

        def bwd2(g):
            a.accumulate(g * 2 * a.data)

        return _make(out_data, (a,), bwd2)

    def bwd(g):
        a.accumulate(g * p * a.data ** (p - 1))

    return _make(a.data**p, (a,), bwd)


def exp(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    out_data = np.exp(a.data)

    def bwd(g):
        a.accumulate(g * out_data)

    return _make(out_data, (a,), bwd)


def log(a: TensorLike) -> Tensor:
    a = as_tensor(a)

    def bwd(g):
        a.accumulate(g / a.data)

    return _make(np.log(a.data), (a,), bwd)


def tanh(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    out_data = np.tanh(a.data)

    def bwd(g):
        a.accumulate(g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), bwd)


def sigmoid(a: TensorLike) -> Tensor:
    a = as_tensor(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        a.accumulate(g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), bwd)


def absolute(a: TensorLike) -> Tensor:
    a = as_tensor(a)

    def bwd(g):
        a.accumulate(g * np.sign(a.data))

    return _make(np.abs(a.data), (a,), bwd)


def elu(a: TensorLike, alpha: float = 1.0) -> Tensor:
    a = as_tensor(a)
    neg = alpha * (np.exp(np.minimum(a.data, 0.0)) - 1.0)
    out_data = np.where(a.data > 0.0, a.data, neg)

    def bwd(g):
        a.accumulate(g * np.where(a.data > 0.0, 1.0, neg + alpha))

    return _make(out_data, (a,), bwd)


def gelu(a: TensorLike) -> Tensor:
    """tanh-approximation GELU."""
    a = as_tensor(a)
    c = DTYPE(np.sqrt(2.0 / np.pi))
    x = a.data
    x2 = x * x
    t = np.tanh(c * (x + 0.044715 * (x2 * x)))
    out_data = 0.5 * x * (1.0 + t)

    def bwd(g):
        du = c * (1.0 + 0.134145 * x2)
        a.accumulate(g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du))

    return _make(out_data, (a,), bwd)


def tsum(a: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def bwd(g):
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.data.shape).astype(DTYPE))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.accumulate(np.broadcast_to(gg, a.data.shape).astype(DTYPE))

    return _make(a.data.sum(axis=axis, keepdims=keepdims, dtype=DTYPE), (a,), bwd)


def tmean(a: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else (
        np.prod([a.data.shape[i] for i in (axis if isinstance(axis, tuple) else (axis,))])
    )

    def bwd(g):
        if axis is None:
            a.accumulate((np.broadcast_to(g, a.data.shape) / n).astype(DTYPE))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.accumulate((np.broadcast_to(gg, a.data.shape) / n).astype(DTYPE))

    return _make(a.data.mean(axis=axis, keepdims=keepdims, dtype=DTYPE), (a,), bwd)


def reshape(a: TensorLike, shape) -> Tensor:
    a = as_tensor(a)
    old = a.data.shape

    def bwd(g):
        a.accumulate(g.reshape(old))

    return _make(a.data.reshape(shape), (a,), bwd)


def transpose(a: TensorLike, axes) -> Tensor:
    a = as_tensor(a)
    inv = np.argsort(axes)

    def bwd(g):
        a.accumulate(g.transpose(inv))

    return _make(a.data.transpose(axes), (a,), bwd)


def _is_basic_index(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(p, (int, slice, type(None), type(Ellipsis))) for p in parts)


def tslice(a: TensorLike, idx) -> Tensor:
    a = as_tensor(a)
    basic = _is_basic_index(idx)

    def bwd(g):
        buf = np.zeros_like(a.data)
        if basic:
            buf[idx] += g  # basic indexing never aliases elements
        else:
            np.add.at(buf, idx, g)
        a.accumulate(buf)

    return _make(a.data[idx], (a,), bwd)


def gather_rows(a: TensorLike, index: np.ndarray) -> Tensor:
    """Select ``a[i, index[i]]`` per leading row; backward scatter-adds."""
    a = as_tensor(a)
    rows = np.arange(a.data.shape[0])

    def bwd(g):
        buf = np.zeros_like(a.data)
        np.add.at(buf, (rows, index), g)
        a.accumulate(buf)

    return _make(a.data[rows, index], (a,), bwd)


def concat(parts: Iterable[TensorLike], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            p.accumulate(g[tuple(sl)])

    return _make(np.concatenate([p.data for p in parts], axis=axis), parts, bwd)


def softmax(a: TensorLike, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * out_data).sum(axis=axis, keepdims=True)
        a.accumulate(out_data * (g - dot))

    return _make(out_data, (a,), bwd)


def layer_norm(x: TensorLike, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalization over the last axis with learned gain/bias."""
    x = as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True, dtype=DTYPE)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True, dtype=DTYPE)
    inv = 1.0 / np.sqrt(var + DTYPE(eps))
    xhat = xc * inv
    out_data = xhat * gain.data + bias.data

    def bwd(g):
        n = x.data.shape[-1]
        gx = g * gain.data
        gxhat_mean = gx.mean(axis=-1, keepdims=True, dtype=DTYPE)
        gxhat_dot = (gx * xhat).mean(axis=-1, keepdims=True, dtype=DTYPE)
        x.accumulate((inv * (gx - gxhat_mean - xhat * gxhat_dot)).astype(DTYPE))
        gain.accumulate(_unbroadcast(g * xhat, gain.data.shape))
        bias.accumulate(_unbroadcast(g, bias.data.shape))
        del n

    return _make(out_data, (x, gain, bias), bwd)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable parameter."""
    if loss.data.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    loss.accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    # free the graph so buffers can be reclaimed between steps
    for node in topo:
        if node is not loss and node._backward is not None:
            node._parents = ()
            node._backward = None
            if not node.requires_grad:
                node.grad = None


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
