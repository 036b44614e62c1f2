"""Recurrent timestamp encoder.

A timestamp in seconds is rendered as a fixed-point decimal string with one
decimal place ("73.5"), each character is looked up in a learned digit
embedding table, and a gated recurrent (GRU) cell consumes the characters
left to right.  The final hidden state is the timestamp embedding.  This
keeps arbitrarily large times representable without magnitude saturation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .kernels import _param

DIGIT_ALPHABET = "0123456789."
MAX_TIME_SECONDS = 1e6


@dataclass
class TimeEncoderParams:
    dim: int
    embed: Node  # (len(DIGIT_ALPHABET), D)
    w_update: Node
    u_update: Node
    b_update: Node
    w_reset: Node
    u_reset: Node
    b_reset: Node
    w_cand: Node
    u_cand: Node
    b_cand: Node

    def parameters(self):
        return [
            ("embed", self.embed),
            ("w_update", self.w_update),
            ("u_update", self.u_update),
            ("b_update", self.b_update),
            ("w_reset", self.w_reset),
            ("u_reset", self.u_reset),
            ("b_reset", self.b_reset),
            ("w_cand", self.w_cand),
            ("u_cand", self.u_cand),
            ("b_cand", self.b_cand),
        ]


def time_encoder_params(dim: int, rng: np.random.Generator, dtype=np.float64) -> TimeEncoderParams:
    bound = 1.0 / math.sqrt(dim)
    mat = lambda: _param(rng, (dim, dim), bound, dtype)
    vec = lambda: _param(rng, (dim,), bound, dtype)
    return TimeEncoderParams(
        dim=dim,
        embed=_param(rng, (len(DIGIT_ALPHABET), dim), bound, dtype),
        w_update=mat(), u_update=mat(), b_update=vec(),
        w_reset=mat(), u_reset=mat(), b_reset=vec(),
        w_cand=mat(), u_cand=mat(), b_cand=vec(),
    )


def render_time(t: float) -> str:
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"timestamp must be finite and non-negative, got {t}")
    if t >= MAX_TIME_SECONDS:
        raise ValueError(f"timestamp {t} exceeds the {MAX_TIME_SECONDS:.0f}s limit")
    return f"{t:.1f}"


def encode_timestamp(t: float, p: TimeEncoderParams) -> Node:
    """Embed a timestamp; returns the final (D,) GRU hidden state."""
    text = render_time(t)
    dtype = p.embed.value.dtype
    h = Node(np.zeros((1, p.dim), dtype=dtype))
    for ch in text:
        x = ad.reshape(p.embed[DIGIT_ALPHABET.index(ch)], (1, p.dim))
        z = ad.sigmoid(x @ p.w_update + h @ p.u_update + p.b_update)
        r = ad.sigmoid(x @ p.w_reset + h @ p.u_reset + p.b_reset)
        n = ad.tanh(x @ p.w_cand + (r * h) @ p.u_cand + p.b_cand)
        h = (1.0 - z) * n + z * h
    return ad.reshape(h, (p.dim,))
