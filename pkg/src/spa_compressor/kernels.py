"""Dense transformer numerics: layer norm, multi-head attention, FFN.

All kernels take and return :class:`~spa_compressor.autodiff.Node` values so
both the forward result and analytic gradients come from one code path.
Weights are initialized uniformly in [-1/sqrt(D), 1/sqrt(D)] from a seeded
generator, which makes every run bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node

LAYER_NORM_EPS = 1e-5
FFN_HIDDEN_MULT = 4


def check_finite(value: np.ndarray, what: str) -> None:
    if np.isfinite(value).all():
        return
    bad = np.argwhere(~np.isfinite(value))[0]
    raise ValueError(f"non-finite value in {what} at index {tuple(int(i) for i in bad)}")


def _param(rng: np.random.Generator, shape, bound: float, dtype) -> Node:
    return Node(rng.uniform(-bound, bound, size=shape).astype(dtype))


@dataclass
class LayerNormParams:
    scale: Node  # (D,), initialized to ones
    shift: Node  # (D,), initialized to zeros

    def parameters(self):
        return [("scale", self.scale), ("shift", self.shift)]


def layer_norm_params(dim: int, dtype=np.float64) -> LayerNormParams:
    return LayerNormParams(
        scale=Node(np.ones(dim, dtype=dtype)),
        shift=Node(np.zeros(dim, dtype=dtype)),
    )


def layer_norm(x: Node, p: LayerNormParams, eps: float = LAYER_NORM_EPS) -> Node:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    check_finite(x.value, "layer_norm input")
    centered = x - ad.reduce_mean(x, axis=-1, keepdims=True)
    variance = ad.reduce_mean(centered * centered, axis=-1, keepdims=True)
    normalized = centered * ad.power(variance + eps, -0.5)
    return normalized * p.scale + p.shift


@dataclass
class AttentionParams:
    heads: int
    wq: Node
    wk: Node
    wv: Node
    wo: Node
    bq: Node | None = None
    bk: Node | None = None
    bv: Node | None = None
    bo: Node | None = None

    def parameters(self):
        named = [("wq", self.wq), ("wk", self.wk), ("wv", self.wv), ("wo", self.wo)]
        for name, b in (("bq", self.bq), ("bk", self.bk), ("bv", self.bv), ("bo", self.bo)):
            if b is not None:
                named.append((name, b))
        return named


def attention_params(
    dim: int,
    heads: int,
    rng: np.random.Generator,
    dtype=np.float64,
    bias: bool = True,
) -> AttentionParams:
    if dim % heads != 0:
        raise ValueError(f"head count {heads} must divide model dim {dim}")
    bound = 1.0 / np.sqrt(dim)
    weights = [_param(rng, (dim, dim), bound, dtype) for _ in range(4)]
    biases = [_param(rng, (dim,), bound, dtype) for _ in range(4)] if bias else [None] * 4
    return AttentionParams(heads, *weights, *biases)


def _project(x: Node, w: Node, b: Node | None) -> Node:
    out = x @ w
    return out if b is None else out + b


def _split_heads(x: Node, heads: int) -> Node:
    b, length, dim = x.shape
    head_dim = dim // heads
    x = ad.reshape(x, (b, length, heads, head_dim))
    x = ad.transpose(x, (0, 2, 1, 3))
    return ad.reshape(x, (b * heads, length, head_dim))


def _merge_heads(x: Node, batch: int, heads: int) -> Node:
    _, length, head_dim = x.shape
    x = ad.reshape(x, (batch, heads, length, head_dim))
    x = ad.transpose(x, (0, 2, 1, 3))
    return ad.reshape(x, (batch, length, heads * head_dim))


def cross_attention(
    q: Node,
    kv: Node,
    p: AttentionParams,
    return_weights: bool = False,
):
    """Multi-head scaled-dot-product attention of queries ``q`` into ``kv``.

    Softmax runs over the key axis with scale 1/sqrt(head_dim); no mask.
    With ``return_weights`` also returns the (batch*heads, Lq, Lkv) rows.
    """
    if q.ndim != 3 or kv.ndim != 3:
        raise ValueError(f"expected rank-3 inputs, got {q.shape} and {kv.shape}")
    batch, _, dim = q.shape
    if kv.shape[0] != batch or kv.shape[2] != dim:
        raise ValueError(f"query/context shape mismatch: {q.shape} vs {kv.shape}")
    if kv.shape[1] == 0:
        raise ValueError("attention context is empty (zero key/value tokens)")
    check_finite(q.value, "attention query input")
    check_finite(kv.value, "attention key/value input")

    head_dim = dim // p.heads
    qh = _split_heads(_project(q, p.wq, p.bq), p.heads)
    kh = _split_heads(_project(kv, p.wk, p.bk), p.heads)
    vh = _split_heads(_project(kv, p.wv, p.bv), p.heads)

    scores = (qh @ ad.swapaxes(kh, -1, -2)) * (1.0 / np.sqrt(head_dim))
    weights = ad.softmax(scores)
    context = _merge_heads(weights @ vh, batch, p.heads)
    out = _project(context, p.wo, p.bo)
    if return_weights:
        return out, weights
    return out


def self_attention(x: Node, p: AttentionParams, return_weights: bool = False):
    return cross_attention(x, x, p, return_weights=return_weights)


@dataclass
class FfnParams:
    w1: Node
    b1: Node
    w2: Node
    b2: Node

    def parameters(self):
        return [("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)]


def ffn_params(
    dim: int,
    rng: np.random.Generator,
    dtype=np.float64,
    hidden: int | None = None,
) -> FfnParams:
    hidden = FFN_HIDDEN_MULT * dim if hidden is None else hidden
    bound = 1.0 / np.sqrt(dim)
    return FfnParams(
        w1=_param(rng, (dim, hidden), bound, dtype),
        b1=_param(rng, (hidden,), bound, dtype),
        w2=_param(rng, (hidden, dim), bound, dtype),
        b2=_param(rng, (dim,), bound, dtype),
    )


def ffn(x: Node, p: FfnParams) -> Node:
    """Position-wise feed-forward: affine, GELU, affine; keeps width D."""
    check_finite(x.value, "ffn input")
    return ad.gelu(x @ p.w1 + p.b1) @ p.w2 + p.b2
