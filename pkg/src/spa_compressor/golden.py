"""Golden-file regression: recompute fixed seeded cases and compare."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compressor import CompressorConfig, SpaCompressor
from .goldenio import first_divergence, read_tensor, write_tensor
from .synthetic import SyntheticVideoSpec, generate

TOLERANCES = {"f64": 1e-10, "f32": 1e-5}


@dataclass(frozen=True)
class GoldenCase:
    name: str
    config: CompressorConfig
    video: SyntheticVideoSpec


@dataclass
class VerifyResult:
    name: str
    ok: bool
    detail: str


def load_manifest(path) -> list[GoldenCase]:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"golden manifest not found: {path}")
    cases = []
    for section in parser.sections():
        if not section.startswith("case:"):
            continue
        sec = parser[section]
        config = CompressorConfig(
            dim=sec.getint("d"),
            heads=sec.getint("heads"),
            scene_tokens=sec.getint("s"),
            event_tokens=sec.getint("e"),
            scene_layers=sec.getint("l_s"),
            event_layers=sec.getint("l_e"),
            vision_tokens_per_frame=sec.getint("l_v"),
            mode=sec.get("mode"),
            seed=sec.getint("seed"),
            precision=sec.get("precision", "f64"),
        )
        video = SyntheticVideoSpec(
            n_frames=sec.getint("video_frames"),
            n_sentences=sec.getint("video_sentences"),
            vision_tokens_per_frame=config.vision_tokens_per_frame,
            dim=config.dim,
            seed=sec.getint("video_seed"),
        )
        cases.append(GoldenCase(section.removeprefix("case:"), config, video))
    if not cases:
        raise ValueError(f"no [case:*] sections in golden manifest {path}")
    return cases


def compute_case(case: GoldenCase) -> np.ndarray:
    frames, sentences = generate(case.video)
    model = SpaCompressor(case.config)
    return model.forward(frames, sentences).flattened.value


def emit(cases: list[GoldenCase], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for case in cases:
        path = directory / f"{case.name}.spat"
        write_tensor(path, compute_case(case))
        paths.append(path)
    return paths


def verify(cases: list[GoldenCase], directory) -> list[VerifyResult]:
    directory = Path(directory)
    results = []
    for case in cases:
        path = directory / f"{case.name}.spat"
        tolerance = TOLERANCES[case.config.precision]
        if not path.exists():
            results.append(VerifyResult(case.name, False, f"missing golden file {path}"))
            continue
        stored = read_tensor(path)
        fresh = compute_case(case)
        if stored.shape != fresh.shape:
            results.append(
                VerifyResult(case.name, False, f"shape {stored.shape} != recomputed {fresh.shape}")
            )
            continue
        divergence = first_divergence(stored, fresh, tolerance)
        if divergence is None:
            results.append(VerifyResult(case.name, True, f"match within {tolerance:g}"))
        else:
            idx, a, b = divergence
            results.append(
                VerifyResult(case.name, False, f"first divergence at {idx}: stored {a!r} vs recomputed {b!r}")
            )
    return results
