"""Minimal reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a float64 array and remembers how it was produced; calling
``backward()`` on a scalar walks the tape in reverse topological order and
accumulates gradients into every reachable leaf.  Only the operations the
ordering model needs are provided.  Everything runs in float64: gradient
checks against central finite differences are part of this package's test
contract and float32 does not leave enough headroom for them.

Inference code wraps calls in ``no_grad()`` which skips tape construction
entirely.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable tape recording inside the block (forward-only evaluation)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_vjp")

    def __init__(self, data, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        if _GRAD_ENABLED:
            self._parents = parents
            self._vjp = vjp
        else:
            self._parents = ()
            self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(as_tensor(other), -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    # gradient machinery ---------------------------------------------------
    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Backpropagate from this scalar tensor through the tape."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._vjp is not None and node.grad is not None:
                for parent, g in zip(node._parents, node._vjp(node.grad)):
                    if g is not None:
                        parent._accumulate(g)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(data, parents, vjp):
    if _GRAD_ENABLED:
        return Tensor(data, parents=parents, vjp=vjp)
    return Tensor(data)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data
    return _make(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data
    return _make(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _make(a.data * c, (a,), lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    """Matrix product with numpy semantics for 2-D and batched operands."""
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(out, (a, b), vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return _make(a.data * mask, (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    inv = np.argsort(axes)
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),))


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    n = a.data.size
    return _make(a.data.mean(), (a,), lambda g: (np.full(a.shape, g / n),))


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.sum(), (a,), lambda g: (np.full(a.shape, g),))


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), vjp)


def gather_axis1(a, idx: np.ndarray) -> Tensor:
    """Select rows along axis 1: a is (B, N, F), idx (B, T) -> (B, T, F)."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    b = np.arange(a.shape[0])[:, None]
    out = a.data[b, idx]

    def vjp(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (b, idx), g)
        return (ga,)

    return _make(out, (a,), vjp)


def take_pairs(a, idx: np.ndarray) -> Tensor:
    """Pick one entry per row on the last axis: a (..., V), idx (...) -> (...)."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    grid = np.ix_(*[np.arange(n) for n in a.shape[:-1]]) if a.ndim > 1 else ()
    out = a.data[grid + (idx,)] if a.ndim > 1 else a.data[idx]

    def vjp(g):
        ga = np.zeros_like(a.data)
        if a.ndim > 1:
            np.add.at(ga, grid + (idx,), g)
        else:
            np.add.at(ga, idx, g)
        return (ga,)

    return _make(out, (a,), vjp)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = gamma.data * xhat + beta.data

    def vjp(g):
        gxhat = g * gamma.data
        gx = inv * (
            gxhat
            - gxhat.mean(axis=-1, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
        )
        reduce_axes = tuple(range(g.ndim - 1))
        ggamma = (g * xhat).sum(axis=reduce_axes)
        gbeta = g.sum(axis=reduce_axes)
        return gx, ggamma, gbeta

    return _make(out, (x, gamma, beta), vjp)


def masked_log_softmax(x, valid: np.ndarray) -> Tensor:
    """Log-softmax over the last axis restricted to ``valid`` entries.

    Invalid entries come back as exactly -inf (probability exactly zero) and
    receive exactly zero gradient; they cannot influence the valid entries.
    ``valid`` must have at least one True per row.
    """
    x = as_tensor(x)
    valid = np.broadcast_to(np.asarray(valid, dtype=bool), x.shape)
    if not valid.any(axis=-1).all():
        raise ValueError("masked_log_softmax: a row has no valid entries")
    neg = np.where(valid, x.data, -np.inf)
    m = np.max(neg, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        shifted = neg - m
    shifted = np.where(valid, shifted, -np.inf)
    ex = np.exp(shifted)  # exp(-inf) == 0 exactly
    z = ex.sum(axis=-1, keepdims=True)
    log_p = shifted - np.log(z)
    p = ex / z

    def vjp(g):
        g = np.where(valid, g, 0.0)
        return (np.where(valid, g - p * g.sum(axis=-1, keepdims=True), 0.0),)

    return _make(log_p, (x,), vjp)


def dropout(x, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when rate == 0."""
    x = as_tensor(x)
    if rate <= 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    m = keep / (1.0 - rate)
    return _make(x.data * m, (x,), lambda g: (g * m,))
