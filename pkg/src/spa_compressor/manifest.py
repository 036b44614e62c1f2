"""Plain-text video manifests.

One record per line, whitespace-separated; tensor payloads live in
sibling snapshot files referenced by relative path:

    frame <index> <time_seconds> <tensor_path>
    sentence <index> <t_start> <t_end> <tensor_path>

Lines starting with '#' are comments.
"""

from __future__ import annotations

from pathlib import Path

from .goldenio import read_tensor, write_tensor
from .sequence import AsrSentence, Frame, validate_frames, validate_sentences


def write_video(directory, frames: list[Frame], sentences: list[AsrSentence]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["# video manifest"]
    for f in frames:
        rel = f"frame_{f.index:05d}.spat"
        write_tensor(directory / rel, f.vision_tokens)
        lines.append(f"frame {f.index} {f.time_seconds!r} {rel}")
    for s in sentences:
        rel = f"sentence_{s.index:05d}.spat"
        write_tensor(directory / rel, s.tokens)
        lines.append(f"sentence {s.index} {s.start!r} {s.end!r} {rel}")
    path = directory / "video.manifest"
    path.write_text("\n".join(lines) + "\n")
    return path


def read_video(manifest_path) -> tuple[list[Frame], list[AsrSentence]]:
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    frames: list[Frame] = []
    sentences: list[AsrSentence] = []
    for lineno, raw in enumerate(manifest_path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "frame":
                index, time_s, rel = int(fields[1]), float(fields[2]), fields[3]
                frames.append(Frame(index, time_s, read_tensor(base / rel)))
            elif kind == "sentence":
                index, start, end, rel = int(fields[1]), float(fields[2]), float(fields[3]), fields[4]
                sentences.append(AsrSentence(index, start, end, read_tensor(base / rel)))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{manifest_path}:{lineno}: malformed record: {exc}") from exc
    frames.sort(key=lambda f: f.index)
    sentences.sort(key=lambda s: s.index)
    validate_frames(frames)
    validate_sentences(sentences)
    return frames, sentences
