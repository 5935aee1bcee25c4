"""Dense tensors with a reverse-mode tape over a small, fixed set of ops."""

from __future__ import annotations

import numpy as np

_DTYPE = np.float64


def set_default_dtype(dtype) -> None:
    """float64 for tests and gradient checks; float32 is fine for training."""
    global _DTYPE
    _DTYPE = np.dtype(dtype).type


def default_dtype():
    return _DTYPE


class GradientError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=_DTYPE) if not isinstance(data, np.ndarray) else data
        self.grad = None
        self._parents = parents
        self._backward = backward
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def requires_grad(self):
        return bool(self._parents) or isinstance(self, Parameter)

    def item(self) -> float:
        return float(self.data)

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self):
        backward(self)


class Parameter(Tensor):
    """A named leaf whose gradient accumulates across backward passes until zeroed."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(np.array(data, dtype=_DTYPE))
        self.name = name
        self.grad = np.zeros_like(self.data)

    @property
    def value(self):
        return self.data

    @property
    def gradient(self):
        return self.grad

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=_DTYPE))


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _node(data, parents, fn):
    return Tensor(data, tuple(parents), fn)


# --- elementwise ----------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), bw)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _node(a.data - b.data, (a, b), bw)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), bw)


def scale(a, c: float):
    a = as_tensor(a)
    return _node(a.data * c, (a,), lambda g: (g * c,))


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a):
    """tanh approximation; smooth everywhere, which keeps finite differences honest."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def bw(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    return _node(out, (a,), bw)


# --- reductions and shape -------------------------------------------------


def sum_all(a):
    a = as_tensor(a)
    return _node(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean_all(a):
    a = as_tensor(a)
    n = a.data.size
    return _node(np.asarray(a.data.mean()), (a,), lambda g: (np.full(a.shape, g / n, dtype=a.data.dtype),))


def reshape(a, shape):
    a = as_tensor(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes):
    a = as_tensor(a)
    inv = np.argsort(axes)
    return _node(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, bw)


def take(a, index, axis=0):
    """Select entries along ``axis`` (integer array or slice)."""
    a = as_tensor(a)
    sl = [slice(None)] * a.data.ndim
    sl[axis] = index
    sl = tuple(sl)

    def bw(g):
        out = np.zeros_like(a.data)
        np.add.at(out, sl, g)
        return (out,)

    return _node(a.data[sl], (a,), bw)


def gather(table, ids):
    """Embedding lookup: rows of ``table`` indexed by an integer array of any shape."""
    table = as_tensor(table)
    ids = np.asarray(ids)

    def bw(g):
        out = np.zeros_like(table.data)
        np.add.at(out, ids, g)
        return (out,)

    return _node(table.data[ids], (table,), bw)


# --- linear algebra -------------------------------------------------------


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(a.data @ b.data, (a, b), bw)


# --- normalisation and losses ---------------------------------------------


def _softmax_np(x, axis, mask=None):
    if mask is not None:
        x = np.where(mask, x, -np.inf)
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    return e / np.where(s > 0, s, 1.0)


def softmax(a, axis=-1, mask=None):
    """Stable softmax. Positions where ``mask`` is False get exactly zero weight,
    and a row with nothing allowed comes out all zeros."""
    a = as_tensor(a)
    if a.shape[axis] == 0:
        raise ValueError("softmax over an empty axis")
    y = _softmax_np(a.data, axis, mask)

    def bw(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _node(y, (a,), bw)


def layer_norm(x, gain, bias, eps=1e-5):
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    n = x.shape[-1]

    def bw(g):
        gx_hat = g * gain.data
        gx = inv / n * (n * gx_hat - gx_hat.sum(-1, keepdims=True) - xhat * (gx_hat * xhat).sum(-1, keepdims=True))
        return gx, _unbroadcast(g * xhat, gain.shape), _unbroadcast(g, bias.shape)

    return _node(xhat * gain.data + bias.data, (x, gain, bias), bw)


def log_softmax_np(x, axis=-1):
    m = x.max(axis=axis, keepdims=True)
    return x - m - np.log(np.exp(x - m).sum(axis=axis, keepdims=True))


def cross_entropy(logits, targets):
    """Mean of -log softmax(logits)[target] over the leading rows.

    ``logits`` is (..., C); ``targets`` an integer array of the leading shape,
    or a single int for a 1-D logit vector.
    """
    logits = as_tensor(logits)
    t = np.asarray(targets)
    z = logits.data.reshape(-1, logits.shape[-1])
    t = t.reshape(-1)
    if t.size == 0:
        raise ValueError("cross_entropy with no targets")
    if np.any(t < 0) or np.any(t >= z.shape[1]):
        raise ValueError("target class out of range")
    lsm = log_softmax_np(z)
    rows = np.arange(t.size)
    loss = -lsm[rows, t].mean()

    def bw(g):
        d = np.exp(lsm)
        d[rows, t] -= 1.0
        return ((g / t.size) * d.reshape(logits.shape),)

    return _node(np.asarray(loss), (logits,), bw)


# --- reverse pass ---------------------------------------------------------


def _topo(root):
    order, seen = [], set()
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
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> list[Parameter]:
    """Accumulate d(loss)/d(param) into every reachable Parameter's ``grad``.

    A recorded graph can be walked once; calling again on the same loss raises.
    """
    if loss._consumed:
        raise GradientError("backward() already ran on this graph; run a fresh forward pass")
    if loss.data.size != 1:
        raise GradientError("backward() needs a scalar loss")
    order = _topo(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    params = []
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if isinstance(node, Parameter):
            if g is not None:
                node.grad = node.grad + g
            params.append(node)
            continue
        if node._backward is None or g is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
    loss._consumed = True
    return params
