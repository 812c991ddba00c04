"""Dense tensors with a reverse-mode tape.

Every forward op records its parents and a closure that maps the output
gradient onto the parents. ``backward`` walks the recorded graph in reverse
topological order, accumulates ``.grad`` on leaves that require it and then
drops the tape so intermediate buffers can be collected.

Broadcasting is deliberately narrow: binary ops accept identical shapes, a
right operand matching the trailing dimensions of the left operand
(leading-batch broadcast), or a Python scalar. Anything else is a
``ShapeError`` naming the op.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

_DTYPE = np.float64


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an op."""


class NumericError(FloatingPointError):
    """Raised when a forward op produces NaN or Inf."""


def set_default_dtype(dtype) -> None:
    global _DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise ValueError(f"unsupported dtype {dtype}")
    _DTYPE = dtype.type


def get_default_dtype():
    return _DTYPE


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 _parents: tuple = (), _backward: Callable | None = None):
        self.data = np.asarray(data, dtype=_DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item: tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # operator sugar; semantics live in the functions below
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return slice_(self, index)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=_DTYPE))


def _make(data: np.ndarray, op: str, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op}: non-finite values in output of shape {data.shape}")
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape or b.data.ndim == 0:
        return
    if b.ndim <= a.ndim and a.shape[a.ndim - b.ndim:] == b.shape:
        return
    raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    lead = g.ndim - len(shape)
    return g.sum(axis=tuple(range(lead))) if lead > 0 else g.sum().reshape(shape)


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim > a.ndim:
        a, b = b, a
    _check_broadcast("add", a, b)

    def backward(g):
        _accum(a, g)
        _accum(b, _reduce_to(g, b.shape))

    return _make(a.data + b.data, "add", (a, b), backward)


def sub(a, b) -> Tensor:
    return add(a, neg(as_tensor(b)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _make(-a.data, "neg", (a,), lambda g: _accum(a, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim > a.ndim:
        a, b = b, a
    _check_broadcast("mul", a, b)

    def backward(g):
        _accum(a, g * b.data)
        _accum(b, _reduce_to(g * a.data, b.shape))

    return _make(a.data * b.data, "mul", (a, b), backward)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _make(a.data * c, "scale", (a,), lambda g: _accum(a, g * c))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data * a.data, "square", (a,), lambda g: _accum(a, 2.0 * a.data * g))


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):  # overflow is reported by the finite check instead
        out = np.exp(a.data)
    return _make(out, "exp", (a,), lambda g: _accum(a, g * out))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), "relu", (a,), lambda g: _accum(a, g * mask))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    out = np.logaddexp(0.0, x)

    def backward(g):
        # sigmoid without overflow
        sig = np.exp(-np.logaddexp(0.0, -x))
        _accum(a, g * sig)

    return _make(out, "softplus", (a,), backward)


# ----------------------------------------------------------------- reductions

def sum_(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis)

    def backward(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.shape))
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return _make(np.asarray(out), "sum", (a,), backward)


def mean(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    if n == 0:
        raise ShapeError(f"mean: empty reduction over shape {a.shape}")
    return scale(sum_(a, axis), 1.0 / n)


# ------------------------------------------------------------------ structure

def matmul(a, b) -> Tensor:
    """Matrix product of 2-D operands, or batched over one shared leading axis."""
    a, b = as_tensor(a), as_tensor(b)
    ok = (a.ndim == 2 and b.ndim == 2 and a.shape[1] == b.shape[0]) or (
        a.ndim == 3 and b.ndim == 3 and a.shape[0] == b.shape[0] and a.shape[2] == b.shape[1]
    ) or (a.ndim == 3 and b.ndim == 2 and a.shape[2] == b.shape[0])
    if not ok:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        if a.requires_grad:
            _accum(a, g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            if a.ndim == 3 and b.ndim == 2:
                _accum(b, np.tensordot(a.data, g, axes=([0, 1], [0, 1])))
            else:
                _accum(b, np.swapaxes(a.data, -1, -2) @ g)

    return _make(a.data @ b.data, "matmul", (a, b), backward)


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        if a.ndim != 2:
            raise ShapeError(f"transpose: default axes need 2-D input, got {a.shape}")
        axes = (1, 0)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), "transpose", (a,),
                 lambda g: _accum(a, np.transpose(g, inv)))


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot reshape {a.shape} to {tuple(shape)}") from exc
    return _make(out, "reshape", (a,), lambda g: _accum(a, g.reshape(a.shape)))


def broadcast_to(a, shape: Sequence[int]) -> Tensor:
    """Explicit broadcast; gradients are summed back over the expanded axes."""
    a = as_tensor(a)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError as exc:
        raise ShapeError(f"broadcast_to: cannot broadcast {a.shape} to {shape}") from exc

    def backward(g):
        lead = g.ndim - a.ndim
        g = g.sum(axis=tuple(range(lead))) if lead else g
        keep = tuple(i for i, n in enumerate(a.shape) if n == 1 and g.shape[i] != 1)
        if keep:
            g = g.sum(axis=keep, keepdims=True)
        _accum(a, g)

    return _make(np.ascontiguousarray(out), "broadcast_to", (a,), backward)


def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    if not ts:
        raise ShapeError("concat: no inputs")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from exc
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def backward(g):
        for t, piece in zip(ts, np.split(g, bounds, axis=axis)):
            _accum(t, piece)

    return _make(out, "concat", ts, backward)


def slice_(a, index) -> Tensor:
    a = as_tensor(a)
    out = a.data[index]

    def backward(g):
        if not a.requires_grad:
            return
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        _accum(a, full)

    return _make(np.array(out, copy=True), "slice", (a,), backward)


def take_rows(a, idx) -> Tensor:
    """Gather rows (first axis) by an integer index array; embedding lookup."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeError(f"take_rows: index out of range for shape {a.shape}")
    out = a.data[idx]

    def backward(g):
        if not a.requires_grad:
            return
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        _accum(a, full)

    return _make(out, "take_rows", (a,), backward)


# ------------------------------------------------------------ composite kernels

def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        _accum(a, out * (g - dot))

    return _make(out, "softmax", (a,), backward)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then apply an elementwise affine map."""
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(f"layer_norm: gain/bias {gain.shape}/{bias.shape} vs input {a.shape}")
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    out = xhat * gain.data + bias.data

    def backward(g):
        flat = tuple(range(g.ndim - 1))
        _accum(gain, (g * xhat).sum(axis=flat))
        _accum(bias, g.sum(axis=flat))
        if a.requires_grad:
            gx = g * gain.data
            dx = rstd * (gx - gx.mean(axis=-1, keepdims=True)
                         - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
            _accum(a, dx)

    return _make(out, "layer_norm", (a, gain, bias), backward)


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian_basis(x, mu, sigma) -> Tensor:
    """Evaluate a bank of normal densities at every entry of ``x``.

    ``x`` has any shape ``s``; ``mu`` and ``sigma`` have shape ``(C,)``.
    The output has shape ``s + (C,)`` with
    ``out[..., k] = exp(-(x - mu_k)^2 / (2 sigma_k^2)) / (sigma_k sqrt(2 pi))``.
    """
    x, mu, sigma = as_tensor(x), as_tensor(mu), as_tensor(sigma)
    if mu.ndim != 1 or sigma.shape != mu.shape:
        raise ShapeError(f"gaussian_basis: mu {mu.shape} and sigma {sigma.shape} must be equal 1-D")
    if np.any(sigma.data <= 0):
        raise NumericError("gaussian_basis: sigma must be positive")
    z = (x.data[..., None] - mu.data) / sigma.data
    out = np.exp(-0.5 * z * z) * (_INV_SQRT_2PI / sigma.data)

    def backward(g):
        gz = g * out
        lead = tuple(range(gz.ndim - 1))
        # d out / d x = -out * z / sigma ; d/dmu = out * z / sigma
        dxz = gz * z / sigma.data
        _accum(x, -dxz.sum(axis=-1))
        _accum(mu, dxz.sum(axis=lead))
        # d out / d sigma = out * (z^2 - 1) / sigma
        _accum(sigma, (gz * (z * z - 1.0) / sigma.data).sum(axis=lead))

    return _make(out, "gaussian_basis", (x, mu, sigma), backward)


# ------------------------------------------------------------------- backward

def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(root, False)]
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
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> list[Tensor]:
    """Populate ``.grad`` on every leaf reachable from ``loss``.

    Returns the reached leaves that require gradients. The recorded graph is
    released afterwards, so a second call on the same loss finds nothing.
    """
    if loss.data.size != 1 or loss.ndim > 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return []
    order = _topo(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: list[Tensor] = []
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if node._backward is None:
            if g is not None:
                node.grad = g if node.grad is None else node.grad + g
            leaves.append(node)
            continue
        if g is None:
            continue
        # route parent gradients through a scratch slot, not the leaf .grad
        uniq = {id(p): p for p in node._parents}.values()
        saved = [(p, p.grad) for p in uniq]
        for p, _ in saved:
            p.grad = None
        node._backward(g)
        for p, old in saved:
            if p.grad is not None:
                prev = grads.get(id(p))
                grads[id(p)] = p.grad if prev is None else prev + p.grad
            p.grad = old
    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
    return leaves
