# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Graphs are built by running ordinary Python code on Tensor objects
(define-by-run) and are thrown away after every training step.  Each
primitive records its parents and a closure that maps the adjoint of its
output onto adjoints of its inputs; forward_backward() walks the graph in
reverse topological order and returns the gradient of a scalar root with
respect to every leaf that requires one.

Double precision is the reference arithmetic.  Tensors built from float32
arrays stay float32, which is how training opts into single precision.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from sasv.Datatypes import ContractError

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class NumericError(Exception):
    """Exception raised when a graph node produces a NaN or Inf.

    op names the graph node; component names the loss term being built
    when the failure happened, if known.
    """

    def __init__(self, message, op=None, component=None):
        super().__init__(message)
        self.op = op
        self.component = component


# clip applied inside arccos so its derivative stays finite at +-1
ARCCOS_CLIP = 1.0 - 1e-7


def _as_array(data, dtype=None):
    if dtype is not None:
        return np.asarray(data, dtype=dtype)
    if isinstance(data, np.ndarray) and data.dtype == np.float32:
        return data
    return np.asarray(data, dtype=np.float64)


def _unbroadcast(grad, shape):
    """Sum an adjoint back down to the shape of the operand it belongs to."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor(object):
    """A node of the computation graph: a value, its op and its parents.

    Leaves are created directly; every other node is created by one of the
    primitives below.  ``grad`` holds the adjoint cached by the most recent
    forward_backward() call that reached this node.
    """

    def __init__(self, data, requires_grad=False, name=None, dtype=None):
        self.data = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.op = "leaf"
        self.grad = None
        self._parents = ()
        self._backward = None

    @classmethod
    def _node(cls, data, op, parents, backward):
        node = cls.__new__(cls)
        node.data = data
        node.requires_grad = any(p.requires_grad for p in parents)
        node.name = None
        node.op = op
        node.grad = None
        node._parents = tuple(parents)
        node._backward = backward
        if not np.all(np.isfinite(data)):
            raise NumericError("non-finite value produced by '%s' node" % op, op)
        return node

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self):
        return not self._parents

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        label = self.name or self.op
        return "Tensor(%s, shape=%s)" % (label, self.data.shape)

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

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None, keepdims=False):
        return total(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)


def constant(data, like=None) -> Tensor:
    """Wrap data as a leaf that never receives a gradient."""
    dtype = like.data.dtype if isinstance(like, Tensor) else None
    t = Tensor(data, requires_grad=False, dtype=dtype)
    t.op = "const"
    return t


def _lift(x, like=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return constant(x, like)


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, _lift(b, a)
    b = _lift(b)
    return _lift(a, b), b


# primitives


def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._node(a.data + b.data, "add", (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._node(a.data - b.data, "subtract", (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._node(a.data * b.data, "multiply", (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        ga = g / b.data
        gb = -g * a.data / (b.data * b.data)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._node(a.data / b.data, "divide", (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _pair(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractError(
            "matmul shape mismatch: %s @ %s" % (a.shape, b.shape)
        )

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor._node(a.data @ b.data, "matmul", (a, b), backward)


def transpose(a) -> Tensor:
    a = _lift(a)

    def backward(g):
        return (g.T,)

    return Tensor._node(a.data.T, "transpose", (a,), backward)


def relu(a) -> Tensor:
    a = _lift(a)
    mask = a.data > 0

    def backward(g):
        return (g * mask,)

    return Tensor._node(np.where(mask, a.data, 0).astype(a.dtype), "relu", (a,), backward)


def exp(a) -> Tensor:
    a = _lift(a)
    out = np.exp(a.data)

    def backward(g):
        return (g * out,)

    return Tensor._node(out, "exp", (a,), backward)


def log(a) -> Tensor:
    a = _lift(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return Tensor._node(out, "log", (a,), backward)


def softmax(a, axis=-1) -> Tensor:
    a = _lift(a)
    shifted = np.exp(a.data - a.data.max(axis=axis, keepdims=True))
    out = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._node(out, "softmax", (a,), backward)


def log_softmax(a, axis=-1) -> Tensor:
    """log(softmax(a)) via a shifted logsumexp; finite for saturated rows."""
    a = _lift(a)
    shifted = a - constant(a.data.max(axis=axis, keepdims=True), a)
    return shifted - log(total(exp(shifted), axis=axis, keepdims=True))


def concat(tensors: Sequence, axis=-1) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, cuts, axis=axis))

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._node(out, "concatenate", tensors, backward)


def l2_norm(a, axis=-1, keepdims=True) -> Tensor:
    """Euclidean norm along an axis (all elements when axis is None).

    The derivative at a zero vector is defined as zero.
    """
    a = _lift(a)
    out = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=keepdims))

    def backward(g):
        n = out
        if not keepdims and axis is not None:
            n = np.expand_dims(n, axis)
            g = np.expand_dims(g, axis)
        safe = np.where(n > 0, n, 1)
        return (np.where(n > 0, g * a.data / safe, 0).astype(a.dtype),)

    return Tensor._node(out, "l2norm", (a,), backward)


def total(a, axis=None, keepdims=False) -> Tensor:
    a = _lift(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._node(a.data.sum(axis=axis, keepdims=keepdims), "sum", (a,), backward)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = _lift(a)
    count = a.data.size if axis is None else a.shape[axis]
    if count == 0:
        raise ContractError("mean over an empty axis")

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return Tensor._node(a.data.mean(axis=axis, keepdims=keepdims), "mean", (a,), backward)


def cos(a) -> Tensor:
    a = _lift(a)

    def backward(g):
        return (-g * np.sin(a.data),)

    return Tensor._node(np.cos(a.data), "cos", (a,), backward)


def arccos(a) -> Tensor:
    """Inverse cosine; inputs are clipped to [-ARCCOS_CLIP, ARCCOS_CLIP]."""
    a = _lift(a)
    inside = np.abs(a.data) < ARCCOS_CLIP
    clipped = np.clip(a.data, -ARCCOS_CLIP, ARCCOS_CLIP)

    def backward(g):
        return (np.where(inside, -g / np.sqrt(1 - clipped * clipped), 0).astype(a.dtype),)

    return Tensor._node(np.arccos(clipped), "arccos", (a,), backward)


def take(a, key) -> Tensor:
    """Indexing (basic or integer-array) with a scatter-add adjoint."""
    a = _lift(a)

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, key, g)
        return (out,)

    return Tensor._node(np.array(a.data[key]), "index", (a,), backward)


@dataclass(frozen=True)
class GrlConfig(object):
    """Scale applied to the reversed gradient of a gradient reversal layer."""

    lambda_: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.lambda_) or self.lambda_ < 0:
            raise ContractError("grl lambda must be >= 0: '" + str(self.lambda_) + "'")


def grl_apply(x, cfg: GrlConfig) -> Tensor:
    """Gradient reversal: identity forward, -lambda times the adjoint backward."""
    if cfg.lambda_ < 0:
        raise ContractError("grl lambda must be >= 0: '" + str(cfg.lambda_) + "'")
    x = _lift(x)
    scale = -float(cfg.lambda_)

    def backward(g):
        return (scale * g,)

    return Tensor._node(x.data.copy(), "grl", (x,), backward)


# composites built from the primitives


def where(mask, a, b) -> Tensor:
    """Select a where mask is true and b elsewhere; mask is a constant."""
    m = np.asarray(mask, dtype=bool)
    a = _lift(a)
    ma = constant(m.astype(a.dtype))
    return a * ma + _lift(b, a) * (1.0 - ma)


def cross_entropy(logits, labels) -> Tensor:
    """Mean softmax cross-entropy of integer labels over the rows of logits."""
    logits = _lift(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ContractError("cross_entropy expects (N, C) logits and N labels")
    onehot = constant(np.eye(logits.shape[1], dtype=logits.dtype)[labels])
    return mean(-total(log_softmax(logits, axis=1) * onehot, axis=1))


# graph traversal


def _topological_order(root: Tensor) -> List[Tensor]:
    order = []
    seen = set()
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
        for parent in reversed(node._parents):
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def forward_backward(graph_root: Tensor) -> Tuple[float, Dict[Tensor, np.ndarray]]:
    """Return the scalar value of graph_root and its gradient for every leaf.

    Only leaves with ``requires_grad`` appear in the gradient map.  The
    graph itself is not modified apart from the cached ``grad`` fields, so
    repeated calls return bit-identical results.
    """
    if graph_root.data.size != 1:
        raise ContractError(
            "forward_backward needs a scalar root, got shape %s" % (graph_root.shape,)
        )
    order = _topological_order(graph_root)
    adjoints = {id(graph_root): np.ones_like(graph_root.data)}
    for node in reversed(order):
        g = adjoints.get(id(node))
        node.grad = g
        if g is None or node._backward is None or not node.requires_grad:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if not np.all(np.isfinite(pg)):
                raise NumericError(
                    "non-finite adjoint produced by '%s' node" % node.op, node.op
                )
            prev = adjoints.get(id(parent))
            adjoints[id(parent)] = pg if prev is None else prev + pg
    gradients = {}
    for node in order:
        if node.is_leaf and node.requires_grad:
            g = adjoints.get(id(node))
            gradients[node] = np.zeros_like(node.data) if g is None else g
    return float(graph_root.data.reshape(-1)[0]), gradients


def grad_check(
    scalar_function: Callable[[Tensor], Tensor], point, eps: float = 1e-5
) -> float:
    """Compare analytic gradients against central differences.

    Returns the maximum over coordinates of
    |analytic - numeric| / max(1, |analytic|), evaluated in double precision.
    """
    if not 0 < eps <= 1e-3:
        raise ContractError("eps must lie in (0, 1e-3]: '" + str(eps) + "'")
    point = np.array(point, dtype=np.float64)
    x = Tensor(point, requires_grad=True)
    out = scalar_function(x)
    if out.data.size != 1:
        raise ContractError("grad_check needs a scalar function, got shape %s" % (out.shape,))
    _, gradients = forward_backward(out)
    analytic = gradients.get(x, np.zeros_like(point))
    worst = 0.0
    for index in np.ndindex(point.shape):
        plus = point.copy()
        minus = point.copy()
        plus[index] += eps
        minus[index] -= eps
        f_plus = scalar_function(Tensor(plus)).item()
        f_minus = scalar_function(Tensor(minus)).item()
        numeric = (f_plus - f_minus) / (2 * eps)
        error = abs(analytic[index] - numeric) / max(1.0, abs(analytic[index]))
        worst = max(worst, error)
    _logger.debug("grad_check over %d coordinates: %.3e", point.size, worst)
    return worst
