"""Reverse-mode automatic differentiation over dense numpy arrays.

A ``Node`` wraps an ndarray together with references to the nodes it was
computed from and one vector-Jacobian product per parent.  Graphs are built
eagerly by the op functions below and differentiated by :func:`backward`,
which walks the graph in reverse topological order.  Everything is pure
numpy, double precision by default, and bit-deterministic: the same inputs
always produce the same graph and the same gradients.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf as _erf, expit as _expit

__all__ = [
    "Node",
    "as_node",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "power",
    "exp",
    "tanh",
    "sigmoid",
    "gelu",
    "softmax",
    "reduce_sum",
    "reduce_mean",
    "reshape",
    "transpose",
    "swapaxes",
    "concat",
    "getitem",
    "backward",
    "grad_of",
]


class Node:
    """One value in the computation graph.

    ``parents`` and ``vjps`` are parallel tuples: ``vjps[i]`` maps the
    upstream gradient to the gradient contribution for ``parents[i]``.
    Leaf nodes (constants, parameters) have empty parents.
    """

    __slots__ = ("value", "parents", "vjps", "name")

    def __init__(self, value, parents=(), vjps=(), name=""):
        self.value = np.asarray(value)
        self.parents = parents
        self.vjps = vjps
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def dtype(self):
        return self.value.dtype

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Node(shape={self.value.shape}{tag})"

    # arithmetic sugar; all routes through the op functions below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __getitem__(self, idx):
        return getitem(self, idx)


def as_node(x) -> Node:
    return x if isinstance(x, Node) else Node(np.asarray(x))


def _coerce_pair(a, b) -> tuple[Node, Node]:
    """Wrap operands as nodes; bare python scalars adopt the partner's dtype
    so float32 graphs are not silently promoted to float64."""
    if isinstance(a, Node) and isinstance(b, (int, float)):
        return a, Node(np.asarray(b, dtype=a.value.dtype))
    if isinstance(b, Node) and isinstance(a, (int, float)):
        return Node(np.asarray(a, dtype=b.value.dtype)), b
    return as_node(a), as_node(b)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Node:
    a, b = _coerce_pair(a, b)
    return Node(
        a.value + b.value,
        (a, b),
        (
            lambda g: _unbroadcast(g, a.value.shape),
            lambda g: _unbroadcast(g, b.value.shape),
        ),
    )


def sub(a, b) -> Node:
    a, b = _coerce_pair(a, b)
    return Node(
        a.value - b.value,
        (a, b),
        (
            lambda g: _unbroadcast(g, a.value.shape),
            lambda g: _unbroadcast(-g, b.value.shape),
        ),
    )


def neg(a) -> Node:
    a = as_node(a)
    return Node(-a.value, (a,), (lambda g: -g,))


def mul(a, b) -> Node:
    a, b = _coerce_pair(a, b)
    return Node(
        a.value * b.value,
        (a, b),
        (
            lambda g: _unbroadcast(g * b.value, a.value.shape),
            lambda g: _unbroadcast(g * a.value, b.value.shape),
        ),
    )


def div(a, b) -> Node:
    a, b = _coerce_pair(a, b)
    out = a.value / b.value
    return Node(
        out,
        (a, b),
        (
            lambda g: _unbroadcast(g / b.value, a.value.shape),
            lambda g: _unbroadcast(-g * out / b.value, b.value.shape),
        ),
    )


def matmul(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul expects operands of rank >= 2")
    return Node(
        a.value @ b.value,
        (a, b),
        (
            lambda g: _unbroadcast(g @ b.value.swapaxes(-1, -2), a.value.shape),
            lambda g: _unbroadcast(a.value.swapaxes(-1, -2) @ g, b.value.shape),
        ),
    )


def power(a, exponent: float) -> Node:
    a = as_node(a)
    e = float(exponent)
    return Node(
        a.value**e,
        (a,),
        (lambda g: g * e * a.value ** (e - 1.0),),
    )


def exp(a) -> Node:
    a = as_node(a)
    out = np.exp(a.value)
    return Node(out, (a,), (lambda g: g * out,))


def tanh(a) -> Node:
    a = as_node(a)
    out = np.tanh(a.value)
    return Node(out, (a,), (lambda g: g * (1.0 - out * out),))


def sigmoid(a) -> Node:
    a = as_node(a)
    out = _expit(a.value).astype(a.value.dtype)
    return Node(out, (a,), (lambda g: g * out * (1.0 - out),))


_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(a) -> Node:
    """Gaussian error linear unit, exact (erf) form; smooth everywhere."""
    a = as_node(a)
    x = a.value
    cdf = 0.5 * (1.0 + _erf(x * _INV_SQRT2))
    out = (x * cdf).astype(x.dtype)

    def vjp(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        return g * (cdf + x * pdf)

    return Node(out, (a,), (vjp,))


def softmax(a) -> Node:
    """Numerically stable softmax over the last axis."""
    a = as_node(a)
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return out * (g - inner)

    return Node(out, (a,), (vjp,))


def reduce_sum(a, axis=None, keepdims=False) -> Node:
    a = as_node(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.value.shape).copy()

    return Node(out, (a,), (vjp,))


def reduce_mean(a, axis=None, keepdims=False) -> Node:
    a = as_node(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return mul(reduce_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Node:
    a = as_node(a)
    return Node(
        a.value.reshape(shape),
        (a,),
        (lambda g: g.reshape(a.value.shape),),
    )


def transpose(a, axes) -> Node:
    a = as_node(a)
    inverse = np.argsort(axes)
    return Node(
        a.value.transpose(axes),
        (a,),
        (lambda g: g.transpose(inverse),),
    )


def swapaxes(a, axis1: int, axis2: int) -> Node:
    a = as_node(a)
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def concat(nodes, axis: int = 0) -> Node:
    nodes = [as_node(n) for n in nodes]
    if not nodes:
        raise ValueError("concat of an empty node list")
    sizes = [n.value.shape[axis] for n in nodes]
    splits = np.cumsum(sizes)[:-1]

    def make_vjp(i):
        return lambda g: np.split(g, splits, axis=axis)[i]

    return Node(
        np.concatenate([n.value for n in nodes], axis=axis),
        tuple(nodes),
        tuple(make_vjp(i) for i in range(len(nodes))),
    )


def getitem(a, idx) -> Node:
    a = as_node(a)
    out = a.value[idx]

    def vjp(g):
        full = np.zeros_like(a.value)
        np.add.at(full, idx, g)
        return full

    return Node(np.array(out, copy=True), (a,), (vjp,))


def _topological_order(root: Node) -> list:
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
        for parent in node.parents:
            stack.append((parent, False))
    return order


def backward(root: Node) -> dict:
    """Accumulate gradients of a scalar ``root`` w.r.t. every graph node.

    Returns a dict keyed by node identity; look values up with
    :func:`grad_of` to get a clear error for nodes outside the graph.
    """
    if root.value.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {root.value.shape}")
    grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.value)}
    for node in reversed(_topological_order(root)):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            contribution = vjp(g)
            existing = grads.get(id(parent))
            if existing is None:
                grads[id(parent)] = contribution
            else:
                grads[id(parent)] = existing + contribution
    return grads


def grad_of(grads: dict, node: Node) -> np.ndarray:
    """Gradient of the backward root w.r.t. ``node``; error if unrecorded."""
    g = grads.get(id(node))
    if g is None:
        raise KeyError(
            f"no gradient recorded for node {node!r}; "
            "it was not part of the differentiated graph"
        )
    return g
