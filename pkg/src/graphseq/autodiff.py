"""Dense float64 tensors with reverse-mode differentiation.

The set of operations is exactly what the model needs: 2-D matrix products,
elementwise arithmetic, the three activations, concatenation and column
slicing, row gather/scatter, segment reductions over flattened neighbor
lists, stable (log-)softmax, and inverted dropout.

The computation graph is define-by-run: each produced tensor closes over its
inputs, so a fresh graph exists per forward pass and is released by
``backward`` (or by dropping references). Nothing global is recorded, which
is what lets per-sample graphs of varying topology coexist.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "no_grad",
    "backward",
    "tensor",
    "zeros",
    "matmul",
    "transpose",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "add_n",
    "relu",
    "tanh",
    "sigmoid",
    "concat",
    "slice_cols",
    "gather_rows",
    "segment_mean",
    "segment_max",
    "reduce_max",
    "reduce_min",
    "reduce_mean",
    "sum_all",
    "mean_all",
    "softmax",
    "log_softmax",
    "get_element",
    "dropout",
    "dense_layer",
]


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


_GRAD_ENABLED = True


class no_grad:
    """Context manager that suspends graph recording (evaluation mode)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    """A float64 array plus an optional gradient of the same shape.

    ``requires_grad`` marks leaves that should receive gradients; tensors
    produced by operations inherit it from their inputs. ``grad`` stays
    ``None`` until ``backward`` reaches the tensor (``None`` means zero).
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._backward = None
        self._parents = ()

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, requires_grad={self.requires_grad})"


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float64), requires_grad=requires_grad)


def _result(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


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


def backward(loss: Tensor, params=None) -> None:
    """Backpropagate from a scalar ``loss`` and release the graph.

    Gradients accumulate into each leaf's ``grad`` (adding to whatever is
    already there, so per-sample calls within a batch sum naturally). When a
    ``ParamSet`` is passed, parameters the loss never touched get explicit
    zero gradients. Intermediate tensors lose their links and gradients
    afterwards; the tape for this forward pass is gone.
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    loss.accumulate_grad(np.ones_like(loss.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

    for node in order:
        if node._parents:  # interior node: not a leaf, drop its piece of the tape
            node._parents = ()
            node._backward = None
            node.grad = None

    if params is not None:
        for name in params.names():
            t = params[name]
            if t.grad is None:
                t.grad = np.zeros_like(t.data)


# ---------------------------------------------------------------------------
# arithmetic


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul mismatch: {tuple(a.shape)} @ {tuple(b.shape)}")
    out_data = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    return _result(out_data, (a, b), bwd)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects 2-D, got {tuple(a.shape)}")

    def bwd(g):
        a.accumulate_grad(g.T)

    return _result(a.data.T.copy(), (a,), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bwd(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.data.shape))

    return _result(out_data, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def bwd(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.data.shape))

    return _result(out_data, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bwd(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.data.shape))

    return _result(out_data, (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    def bwd(g):
        a.accumulate_grad(-g)

    return _result(-a.data, (a,), bwd)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)

    def bwd(g):
        a.accumulate_grad(g * s)

    return _result(a.data * s, (a,), bwd)


def add_n(ts: Sequence[Tensor]) -> Tensor:
    if not ts:
        raise ValueError("add_n needs at least one tensor")
    out_data = ts[0].data.copy()
    for t in ts[1:]:
        if t.data.shape != out_data.shape:
            raise ShapeError(f"add_n mismatch: {t.data.shape} vs {out_data.shape}")
        out_data += t.data

    def bwd(g):
        for t in ts:
            if t.requires_grad:
                t.accumulate_grad(g)

    return _result(out_data, tuple(ts), bwd)


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def bwd(g):
        a.accumulate_grad(g * (a.data > 0.0))

    return _result(out_data, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bwd(g):
        a.accumulate_grad(g * (1.0 - out_data * out_data))

    return _result(out_data, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        a.accumulate_grad(g * out_data * (1.0 - out_data))

    return _result(out_data, (a,), bwd)


# ---------------------------------------------------------------------------
# shape manipulation


def concat(ts: Sequence[Tensor], axis: int = 1) -> Tensor:
    if not ts:
        raise ValueError("concat needs at least one tensor")
    out_data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(idx)])

    return _result(out_data, tuple(ts), bwd)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"slice_cols expects 2-D, got {tuple(a.shape)}")

    def bwd(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        a.accumulate_grad(full)

    return _result(a.data[:, start:stop].copy(), (a,), bwd)


def gather_rows(a: Tensor, idx) -> Tensor:
    """Select rows ``a[idx]``; the backward pass scatter-adds into ``a``."""
    idx = np.asarray(idx, dtype=np.intp)
    out_data = a.data[idx]

    def bwd(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        a.accumulate_grad(full)

    return _result(out_data, (a,), bwd)


# ---------------------------------------------------------------------------
# segment reductions over flattened neighbor lists
#
# ``flat_idx`` concatenates every row's neighbor indices; ``counts[i]`` says
# how many belong to row i. Rows with no neighbors reduce to zero. Summation
# runs left-to-right over the flattened order, so a caller that fixes that
# order (e.g. sorted ids) gets bit-reproducible results.


def _segment_starts(counts: np.ndarray) -> np.ndarray:
    starts = np.zeros(len(counts) + 1, dtype=np.intp)
    np.cumsum(counts, out=starts[1:])
    return starts


def segment_mean(h: Tensor, flat_idx: np.ndarray, counts: np.ndarray) -> Tensor:
    flat_idx = np.asarray(flat_idx, dtype=np.intp)
    counts = np.asarray(counts, dtype=np.intp)
    n_rows = len(counts)
    out_data = np.zeros((n_rows, h.data.shape[1]), dtype=np.float64)
    nonempty = counts > 0
    if flat_idx.size:
        starts = _segment_starts(counts)
        gathered = h.data[flat_idx]
        sums = np.add.reduceat(gathered, starts[:-1][nonempty], axis=0)
        out_data[nonempty] = sums / counts[nonempty, None]

    def bwd(g):
        full = np.zeros_like(h.data)
        if flat_idx.size:
            weights = np.repeat(1.0 / np.maximum(counts, 1), counts)
            np.add.at(full, flat_idx, g[np.repeat(np.arange(n_rows), counts)] * weights[:, None])
        h.accumulate_grad(full)

    return _result(out_data, (h,), bwd)


def segment_max(h: Tensor, flat_idx: np.ndarray, counts: np.ndarray) -> Tensor:
    flat_idx = np.asarray(flat_idx, dtype=np.intp)
    counts = np.asarray(counts, dtype=np.intp)
    n_rows, dim = len(counts), h.data.shape[1]
    out_data = np.zeros((n_rows, dim), dtype=np.float64)
    argmax_rows = np.empty((n_rows, dim), dtype=np.intp)
    starts = _segment_starts(counts)
    for i in range(n_rows):
        seg = flat_idx[starts[i]:starts[i + 1]]
        if len(seg):
            block = h.data[seg]
            winners = block.argmax(axis=0)
            out_data[i] = block[winners, np.arange(dim)]
            argmax_rows[i] = seg[winners]
        else:
            argmax_rows[i] = -1

    def bwd(g):
        full = np.zeros_like(h.data)
        cols = np.arange(dim)
        for i in range(n_rows):
            if counts[i]:
                np.add.at(full, (argmax_rows[i], cols), g[i])
        h.accumulate_grad(full)

    return _result(out_data, (h,), bwd)


# ---------------------------------------------------------------------------
# reductions


def reduce_max(a: Tensor, axis: int = 0) -> Tensor:
    winners = a.data.argmax(axis=axis)
    out_data = np.expand_dims(np.take_along_axis(a.data, np.expand_dims(winners, axis), axis).squeeze(axis), axis)

    def bwd(g):
        full = np.zeros_like(a.data)
        np.put_along_axis(full, np.expand_dims(winners, axis), g, axis)
        a.accumulate_grad(full)

    return _result(out_data, (a,), bwd)


def reduce_min(a: Tensor, axis: int = 0) -> Tensor:
    return neg(reduce_max(neg(a), axis=axis))


def reduce_mean(a: Tensor, axis: int = 0) -> Tensor:
    n = a.data.shape[axis]
    out_data = a.data.mean(axis=axis, keepdims=True)

    def bwd(g):
        a.accumulate_grad(np.broadcast_to(g / n, a.data.shape))

    return _result(out_data, (a,), bwd)


def sum_all(a: Tensor) -> Tensor:
    def bwd(g):
        a.accumulate_grad(np.broadcast_to(g, a.data.shape))

    return _result(np.asarray(a.data.sum()), (a,), bwd)


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.size)


# ---------------------------------------------------------------------------
# softmax family


def softmax(a: Tensor) -> Tensor:
    """Softmax over all elements (stable via max subtraction).

    Output is nonnegative and sums to one; shape is preserved, so row and
    column vectors both work.
    """
    if a.size == 0:
        raise ValueError("softmax of an empty tensor")
    shifted = a.data - a.data.max()
    e = np.exp(shifted)
    out_data = e / e.sum()

    def bwd(g):
        dot = float((g * out_data).sum())
        a.accumulate_grad(out_data * (g - dot))

    return _result(out_data, (a,), bwd)


def log_softmax(a: Tensor) -> Tensor:
    """Log-softmax over all elements (stable)."""
    if a.size == 0:
        raise ValueError("log_softmax of an empty tensor")
    shifted = a.data - a.data.max()
    lse = np.log(np.exp(shifted).sum())
    out_data = shifted - lse

    def bwd(g):
        a.accumulate_grad(g - np.exp(out_data) * g.sum())

    return _result(out_data, (a,), bwd)


def get_element(a: Tensor, i: int, j: int) -> Tensor:
    """Pull out one element of a 2-D tensor as a scalar."""

    def bwd(g):
        full = np.zeros_like(a.data)
        full[i, j] = g
        a.accumulate_grad(full)

    return _result(np.asarray(a.data[i, j]), (a,), bwd)


# ---------------------------------------------------------------------------
# regularization and layers


def dropout(a: Tensor, rate: float, rng, training: bool) -> Tensor:
    """Inverted dropout: scaling happens at train time, inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    out_data = a.data * mask

    def bwd(g):
        a.accumulate_grad(g * mask)

    return _result(out_data, (a,), bwd)


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid, "none": lambda t: t}


def dense_layer(x: Tensor, w: Tensor, b: Tensor, act: str = "none") -> Tensor:
    """act(x @ w + b) with the activation named by ``act``."""
    if act not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {act!r}; expected one of {sorted(_ACTIVATIONS)}")
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense_layer mismatch: x {tuple(x.shape)} vs w {tuple(w.shape)}")
    if b.data.reshape(-1).shape[0] != w.shape[1]:
        raise ShapeError(f"dense_layer bias mismatch: b {tuple(b.shape)} vs w {tuple(w.shape)}")
    return _ACTIVATIONS[act](add(matmul(x, w), b))
