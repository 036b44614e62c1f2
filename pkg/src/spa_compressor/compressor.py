"""Hierarchical scene/event token compressor.

Four stages, each a thin composition of the numeric kernels:

1. fusion       - ASR token embeddings attend into the flattened vision
                  tokens so spoken phrases pick up visual grounding.
2. scene stage  - a bank of S learnable queries cross-attends into the
                  fused ASR + vision context, distilling global context.
3. event stage  - a bank of E learnable queries, shared across frames,
                  runs self-attention / cross-attention / FFN decoder
                  layers against the fused ASR + scene context.  In
                  "frame-conditioned" mode the context is extended with
                  the current frame's normalized vision tokens so event
                  blocks can differ per frame; "global-context" mode uses
                  the frame-independent context only.
4. assembly     - output is [scene block, then per frame: timestamp token
                  followed by its E event tokens], flattened to
                  (B, S + N*(1+E), D).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .kernels import (
    AttentionParams,
    FfnParams,
    LayerNormParams,
    attention_params,
    cross_attention,
    ffn,
    ffn_params,
    layer_norm,
    layer_norm_params,
    self_attention,
)
from .sequence import AsrSentence, Frame, InterleavedSequence, align_sentences, build_sequence
from .time_encoder import encode_timestamp, time_encoder_params

MODE_GLOBAL = "global-context"
MODE_FRAME = "frame-conditioned"
MODES = (MODE_GLOBAL, MODE_FRAME)

_DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass
class CompressorConfig:
    dim: int = 64
    heads: int = 8
    scene_tokens: int = 64
    event_tokens: int = 32
    scene_layers: int = 2
    event_layers: int = 2
    vision_tokens_per_frame: int = 4
    mode: str = MODE_FRAME
    seed: int = 0
    precision: str = "f64"
    attention_bias: bool = True
    positional_encoding: bool = False

    def __post_init__(self):
        if min(self.scene_tokens, self.event_tokens, self.scene_layers, self.event_layers) < 1:
            raise ValueError("scene/event token counts and layer counts must be >= 1")
        if self.dim < 1 or self.heads < 1 or self.dim % self.heads != 0:
            raise ValueError(f"heads ({self.heads}) must divide model dim ({self.dim})")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.precision not in _DTYPES:
            raise ValueError(f"precision must be one of {sorted(_DTYPES)}")

    @property
    def dtype(self):
        return _DTYPES[self.precision]

    @classmethod
    def from_ini(cls, path) -> "CompressorConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
        sec = parser["compressor"]
        return cls(
            dim=sec.getint("d"),
            heads=sec.getint("heads"),
            scene_tokens=sec.getint("s"),
            event_tokens=sec.getint("e"),
            scene_layers=sec.getint("l_s"),
            event_layers=sec.getint("l_e"),
            vision_tokens_per_frame=sec.getint("l_v"),
            mode=sec.get("mode", MODE_FRAME),
            seed=sec.getint("seed", 0),
            precision=sec.get("precision", "f64"),
        )


@dataclass
class FusionParams:
    ln_asr: LayerNormParams
    ln_vision: LayerNormParams
    attn: AttentionParams
    ln_ffn: LayerNormParams
    ffn: FfnParams


@dataclass
class SceneLayerParams:
    ln_attn: LayerNormParams
    attn: AttentionParams
    ln_ffn: LayerNormParams
    ffn: FfnParams


@dataclass
class SceneParams:
    queries: Node  # (S, D), broadcast over the batch at use time
    ln_init: LayerNormParams
    layers: list[SceneLayerParams]


@dataclass
class EventLayerParams:
    ln_self: LayerNormParams
    self_attn: AttentionParams
    ln_cross: LayerNormParams
    cross_attn: AttentionParams
    ln_ffn: LayerNormParams
    ffn: FfnParams


@dataclass
class EventParams:
    queries: Node  # (E, D), one parameter bank replicated for every frame
    ln_init: LayerNormParams
    layers: list[EventLayerParams]
    ln_vision: LayerNormParams | None  # frame-conditioned mode only


@dataclass
class ForwardResult:
    scene: Node  # (B, S, D)
    events: Node  # (B, N, E, D)
    frame_blocks: list[Node]  # N nodes of (B, 1+E, D)
    flattened: Node  # (B, S + N*(1+E), D)
    sequence: InterleavedSequence | None = None

    @property
    def scene_block(self) -> np.ndarray:
        return self.scene.value

    @property
    def flattened_values(self) -> np.ndarray:
        return self.flattened.value


def _tile_batch(x: Node, batch: int) -> Node:
    """Broadcast an unbatched (L, D) parameter to (batch, L, D)."""
    zeros = Node(np.zeros((batch, 1, 1), dtype=x.value.dtype))
    return ad.reshape(x, (1,) + x.shape) + zeros


def _sinusoidal_encoding(length: int, dim: int, dtype) -> np.ndarray:
    position = np.arange(length, dtype=np.float64)[:, None]
    rate = np.exp(-np.log(10000.0) * (2 * (np.arange(dim) // 2)) / dim)
    angles = position * rate[None, :]
    enc = np.where(np.arange(dim) % 2 == 0, np.sin(angles), np.cos(angles))
    return enc.astype(dtype)


class SpaCompressor:
    """Scene/event compressor with learnable parameters and full autodiff."""

    def __init__(self, config: CompressorConfig):
        self.config = config
        d, h = config.dim, config.heads
        dtype = config.dtype
        rng = np.random.default_rng(config.seed)
        bound = 1.0 / np.sqrt(d)
        bias = config.attention_bias

        self.fusion = FusionParams(
            ln_asr=layer_norm_params(d, dtype),
            ln_vision=layer_norm_params(d, dtype),
            attn=attention_params(d, h, rng, dtype, bias),
            ln_ffn=layer_norm_params(d, dtype),
            ffn=ffn_params(d, rng, dtype),
        )
        self.scene = SceneParams(
            queries=Node(rng.uniform(-bound, bound, (config.scene_tokens, d)).astype(dtype)),
            ln_init=layer_norm_params(d, dtype),
            layers=[
                SceneLayerParams(
                    ln_attn=layer_norm_params(d, dtype),
                    attn=attention_params(d, h, rng, dtype, bias),
                    ln_ffn=layer_norm_params(d, dtype),
                    ffn=ffn_params(d, rng, dtype),
                )
                for _ in range(config.scene_layers)
            ],
        )
        self.events = EventParams(
            queries=Node(rng.uniform(-bound, bound, (config.event_tokens, d)).astype(dtype)),
            ln_init=layer_norm_params(d, dtype),
            layers=[
                EventLayerParams(
                    ln_self=layer_norm_params(d, dtype),
                    self_attn=attention_params(d, h, rng, dtype, bias),
                    ln_cross=layer_norm_params(d, dtype),
                    cross_attn=attention_params(d, h, rng, dtype, bias),
                    ln_ffn=layer_norm_params(d, dtype),
                    ffn=ffn_params(d, rng, dtype),
                )
                for _ in range(config.event_layers)
            ],
            ln_vision=layer_norm_params(d, dtype) if config.mode == MODE_FRAME else None,
        )
        self.time_encoder = time_encoder_params(d, rng, dtype)

    # ----- parameter bookkeeping -------------------------------------

    def parameter_groups(self) -> dict[str, list[tuple[str, Node]]]:
        def ln(prefix, p):
            return [(f"{prefix}.{n}", v) for n, v in p.parameters()]

        fusion = (
            ln("ln_asr", self.fusion.ln_asr)
            + ln("ln_vision", self.fusion.ln_vision)
            + ln("attn", self.fusion.attn)
            + ln("ln_ffn", self.fusion.ln_ffn)
            + ln("ffn", self.fusion.ffn)
        )
        scene = [("queries", self.scene.queries)] + ln("ln_init", self.scene.ln_init)
        for i, layer in enumerate(self.scene.layers):
            scene += (
                ln(f"layer{i}.ln_attn", layer.ln_attn)
                + ln(f"layer{i}.attn", layer.attn)
                + ln(f"layer{i}.ln_ffn", layer.ln_ffn)
                + ln(f"layer{i}.ffn", layer.ffn)
            )
        event = [("queries", self.events.queries)] + ln("ln_init", self.events.ln_init)
        if self.events.ln_vision is not None:
            event += ln("ln_vision", self.events.ln_vision)
        for i, layer in enumerate(self.events.layers):
            event += (
                ln(f"layer{i}.ln_self", layer.ln_self)
                + ln(f"layer{i}.self_attn", layer.self_attn)
                + ln(f"layer{i}.ln_cross", layer.ln_cross)
                + ln(f"layer{i}.cross_attn", layer.cross_attn)
                + ln(f"layer{i}.ln_ffn", layer.ln_ffn)
                + ln(f"layer{i}.ffn", layer.ffn)
            )
        time_enc = [(n, v) for n, v in self.time_encoder.parameters()]
        return {
            "fusion": fusion,
            "scene": scene,
            "event": event,
            "time_encoder": time_enc,
        }

    def parameters(self) -> list[tuple[str, Node]]:
        return [
            (f"{group}.{name}", node)
            for group, named in self.parameter_groups().items()
            for name, node in named
        ]

    def state_digest(self) -> dict[str, bytes]:
        return {name: node.value.tobytes() for name, node in self.parameters()}

    # ----- stages -----------------------------------------------------

    def fuse_vision_asr(self, asr: Node, vision: Node) -> tuple[Node, Node]:
        """Fuse ASR tokens (B, L_a, D) with vision tokens (B, N, L_v, D).

        Returns the fused ASR block and the flattened normalized vision
        tokens (B, N*L_v, D) for reuse by the scene stage.
        """
        b, n, l_v, d = vision.shape
        if n * l_v == 0:
            raise ValueError("no visual context: the video has zero vision tokens")
        vision_flat = ad.reshape(layer_norm(vision, self.fusion.ln_vision), (b, n * l_v, d))
        asr_norm = layer_norm(asr, self.fusion.ln_asr)
        attended = asr_norm + cross_attention(asr_norm, vision_flat, self.fusion.attn)
        fused = attended + ffn(layer_norm(attended, self.fusion.ln_ffn), self.fusion.ffn)
        return fused, vision_flat

    def _with_positions(self, context: Node) -> Node:
        if not self.config.positional_encoding:
            return context
        enc = _sinusoidal_encoding(context.shape[1], context.shape[2], context.value.dtype)
        return context + Node(enc)

    def aggregate_scene(self, fused_asr: Node, vision_flat: Node) -> Node:
        """Distill the full token context into S scene tokens (B, S, D)."""
        batch = fused_asr.shape[0]
        context = self._with_positions(ad.concat([fused_asr, vision_flat], axis=1))
        h = layer_norm(_tile_batch(self.scene.queries, batch), self.scene.ln_init)
        for layer in self.scene.layers:
            h = h + cross_attention(layer_norm(h, layer.ln_attn), context, layer.attn)
            h = h + ffn(layer_norm(h, layer.ln_ffn), layer.ffn)
        return h

    def extract_events(self, fused_asr: Node, scene: Node, vision: Node) -> Node:
        """Produce E event tokens per frame, (B, N, E, D).

        The query bank is one (E, D) parameter replicated for every frame.
        """
        batch, n_frames = vision.shape[0], vision.shape[1]
        shared = ad.concat([fused_asr, scene], axis=1)
        per_frame = []
        for i in range(n_frames):
            if self.config.mode == MODE_FRAME:
                frame_tokens = layer_norm(vision[:, i], self.events.ln_vision)
                context = ad.concat([shared, frame_tokens], axis=1)
            else:
                context = shared
            context = self._with_positions(context)
            h = layer_norm(_tile_batch(self.events.queries, batch), self.events.ln_init)
            for layer in self.events.layers:
                h = h + self_attention(layer_norm(h, layer.ln_self), layer.self_attn)
                h = h + cross_attention(layer_norm(h, layer.ln_cross), context, layer.cross_attn)
                h = h + ffn(layer_norm(h, layer.ln_ffn), layer.ffn)
            per_frame.append(ad.reshape(h, (batch, 1, h.shape[1], h.shape[2])))
        return ad.concat(per_frame, axis=1)

    def assemble(self, scene: Node, events: Node, timestamps: list[Node]) -> ForwardResult:
        """Interleave timestamp tokens with event blocks and prepend scene."""
        batch, n_frames, n_events, d = events.shape
        if len(timestamps) != n_frames:
            raise ValueError(
                f"need one timestamp embedding per frame: got {len(timestamps)} for {n_frames}"
            )
        frame_blocks = []
        for i, ts in enumerate(timestamps):
            ts_token = _tile_batch(ad.reshape(ts, (1, d)), batch)
            frame_blocks.append(ad.concat([ts_token, events[:, i]], axis=1))
        flattened = ad.concat([scene] + frame_blocks, axis=1)
        return ForwardResult(scene=scene, events=events, frame_blocks=frame_blocks, flattened=flattened)

    def encode_frame_times(self, frames: list[Frame]) -> list[Node]:
        return [encode_timestamp(f.time_seconds, self.time_encoder) for f in frames]

    def forward(self, frames: list[Frame], sentences: list[AsrSentence]) -> ForwardResult:
        """Full pipeline from raw frame/sentence embeddings to the
        flattened hierarchical representation (B=1)."""
        cfg = self.config
        anchors = align_sentences(frames, sentences)
        sequence = build_sequence(frames, sentences, anchors)

        dtype = cfg.dtype
        for f in frames:
            if f.vision_tokens.shape != (cfg.vision_tokens_per_frame, cfg.dim):
                raise ValueError(
                    f"frame {f.index} vision tokens have shape {f.vision_tokens.shape}, "
                    f"expected {(cfg.vision_tokens_per_frame, cfg.dim)}"
                )
        vision = Node(
            np.stack([f.vision_tokens for f in frames])[None, ...].astype(dtype, copy=False)
        )
        if sentences:
            asr = Node(np.concatenate([s.tokens for s in sentences])[None, ...].astype(dtype, copy=False))
        else:
            asr = Node(np.zeros((1, 0, cfg.dim), dtype=dtype))

        fused, vision_flat = self.fuse_vision_asr(asr, vision)
        scene = self.aggregate_scene(fused, vision_flat)
        events = self.extract_events(fused, scene, vision)
        result = self.assemble(scene, events, self.encode_frame_times(frames))
        result.sequence = sequence
        return result
