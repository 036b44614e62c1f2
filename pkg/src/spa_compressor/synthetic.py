"""Deterministic synthetic video generation for tests and demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence import AsrSentence, Frame

MIN_SENTENCE_WINDOW = 0.2  # seconds


@dataclass(frozen=True)
class SyntheticVideoSpec:
    n_frames: int
    n_sentences: int
    vision_tokens_per_frame: int
    dim: int
    sentence_tokens_min: int = 2
    sentence_tokens_max: int = 4
    frame_step: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("need at least one frame")
        if self.n_sentences < 0:
            raise ValueError("sentence count cannot be negative")
        if not 1 <= self.sentence_tokens_min <= self.sentence_tokens_max:
            raise ValueError("sentence token range must satisfy 1 <= min <= max")
        if self.frame_step <= 0:
            raise ValueError("frame step must be positive")


def generate(spec: SyntheticVideoSpec) -> tuple[list[Frame], list[AsrSentence]]:
    """Sample a video satisfying all frame/sentence invariants.

    Frames sit at multiples of ``frame_step``; sentences occupy disjoint
    sub-intervals of consecutive equal windows spanning the video.
    """
    rng = np.random.default_rng(spec.seed)
    duration = spec.n_frames * spec.frame_step
    if spec.n_sentences > 0:
        window = duration / spec.n_sentences
        if window < MIN_SENTENCE_WINDOW:
            raise ValueError(
                f"{spec.n_sentences} sentences cannot fit a {duration:.1f}s video "
                f"(window {window:.3f}s < {MIN_SENTENCE_WINDOW}s)"
            )

    frames = [
        Frame(
            index=i,
            time_seconds=i * spec.frame_step,
            vision_tokens=rng.standard_normal((spec.vision_tokens_per_frame, spec.dim)),
        )
        for i in range(spec.n_frames)
    ]
    sentences = []
    for j in range(spec.n_sentences):
        lo, hi = j * window, (j + 1) * window
        start = rng.uniform(lo, lo + 0.4 * (hi - lo))
        end = rng.uniform(start + 0.1 * (hi - lo), hi)
        length = int(rng.integers(spec.sentence_tokens_min, spec.sentence_tokens_max + 1))
        sentences.append(
            AsrSentence(
                index=j + 1,
                start=start,
                end=end,
                tokens=rng.standard_normal((length, spec.dim)),
            )
        )
    return frames, sentences
