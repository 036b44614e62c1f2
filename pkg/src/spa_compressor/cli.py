"""Batch command-line interface.

Subcommands:
    ratio     - closed-form compression ratio / reduction, single or grid
    run       - compress a video manifest and write the flattened output
    generate  - write a deterministic synthetic video manifest
    gradcheck - finite-difference verification of the backward pass
    fit       - toy compressor-only gradient-descent loop
    golden    - emit or verify seeded regression snapshots

Exit codes: 0 success, 1 check failure or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analytics, golden
from .compressor import MODE_FRAME, MODES, CompressorConfig, SpaCompressor
from .fitting import FitConfig, fit
from .goldenio import write_tensor
from .gradcheck import DEFAULT_STEP, DEFAULT_TOLERANCE, finite_difference_check
from .manifest import read_video, write_video
from .synthetic import SyntheticVideoSpec, generate

# toy defaults sized so gradcheck and fit finish in seconds
TOY = dict(dim=8, heads=2, scene_tokens=2, event_tokens=2, scene_layers=1, event_layers=1, vision_tokens_per_frame=2)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with a [compressor] section")
    p.add_argument("--d", type=int, default=TOY["dim"])
    p.add_argument("--heads", type=int, default=TOY["heads"])
    p.add_argument("--s", type=int, default=TOY["scene_tokens"])
    p.add_argument("--e", type=int, default=TOY["event_tokens"])
    p.add_argument("--l-s", type=int, default=TOY["scene_layers"])
    p.add_argument("--l-e", type=int, default=TOY["event_layers"])
    p.add_argument("--l-v", type=int, default=TOY["vision_tokens_per_frame"])
    p.add_argument("--mode", choices=MODES, default=MODE_FRAME)


def _model_config(args) -> CompressorConfig:
    if args.config is not None:
        return CompressorConfig.from_ini(args.config)
    return CompressorConfig(
        dim=args.d,
        heads=args.heads,
        scene_tokens=args.s,
        event_tokens=args.e,
        scene_layers=args.l_s,
        event_layers=args.l_e,
        vision_tokens_per_frame=args.l_v,
        mode=args.mode,
        seed=args.seed,
        precision=args.precision,
    )


def _video_spec(args, config: CompressorConfig) -> SyntheticVideoSpec:
    return SyntheticVideoSpec(
        n_frames=args.frames,
        n_sentences=args.sentences,
        vision_tokens_per_frame=config.vision_tokens_per_frame,
        dim=config.dim,
        seed=args.video_seed if args.video_seed is not None else args.seed,
    )


def cmd_ratio(args) -> int:
    if args.grid:
        try:
            s_part, e_part = args.grid.replace("×", "x").split("x")
            scene_grid = [float(v) for v in s_part.split(",") if v]
            event_grid = [float(v) for v in e_part.split(",") if v]
        except ValueError:
            print(f"bad --grid {args.grid!r}; expected 's1,s2x e1,e2' syntax", file=sys.stderr)
            return 2
        reports = analytics.sweep(scene_grid, event_grid, args.n_avg, args.dv)
        out = analytics.format_csv(reports) if args.format == "csv" else analytics.format_table(reports)
        print(out)
        return 0
    if args.s is None or args.e is None:
        print("ratio needs either --grid or both --s and --e", file=sys.stderr)
        return 2
    report = analytics.compression_ratio(analytics.RatioInput(args.s, args.e, args.n_avg, args.dv))
    print(f"ratio {report.display_ratio()}")
    print(f"reduction {report.display_reduction()}%")
    note = analytics.published_note(report)
    if note:
        print(note)
    return 0


def cmd_run(args) -> int:
    config = _model_config(args)
    frames, sentences = read_video(args.manifest)
    model = SpaCompressor(config)
    result = model.forward(frames, sentences)
    write_tensor(args.out, result.flattened.value)

    cfg = model.config
    n = len(frames)
    lines = [
        f"frames {n}  sentences {len(sentences)}  dim {cfg.dim}  mode {cfg.mode}",
        f"interleaved input length {result.sequence.total_length}",
        f"flattened output tokens {result.flattened.shape[1]}"
        f" = scene {cfg.scene_tokens} + {n} x (1 + {cfg.event_tokens})",
        f"scene block [0, {cfg.scene_tokens})",
    ]
    offset = cfg.scene_tokens
    for i in range(n):
        width = 1 + cfg.event_tokens
        lines.append(f"frame {i} block [{offset}, {offset + width})  timestamp at {offset}")
        offset += width
    report_text = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(report_text)
    else:
        print(report_text, end="")
    return 0


def cmd_generate(args) -> int:
    spec = SyntheticVideoSpec(
        n_frames=args.frames,
        n_sentences=args.sentences,
        vision_tokens_per_frame=args.l_v,
        dim=args.d,
        sentence_tokens_min=args.l_s_min,
        sentence_tokens_max=args.l_s_max,
        frame_step=args.step,
        seed=args.seed,
    )
    frames, sentences = generate(spec)
    path = write_video(args.out, frames, sentences)
    print(f"wrote {path}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.tolerance <= 0:
        print("tolerance must be positive", file=sys.stderr)
        return 2
    config = _model_config(args)
    frames, sentences = generate(_video_spec(args, config))
    model = SpaCompressor(config)
    reports = finite_difference_check(
        model, frames, sentences, step=args.step, freeze=tuple(args.freeze)
    )
    failed = False
    for r in reports:
        if r.frozen:
            print(f"{r.name:>14}: frozen ({r.n_params} params, no gradient flow)")
            continue
        ok = r.passed(args.tolerance)
        failed |= not ok
        status = "ok" if ok else "FAIL"
        print(f"{r.name:>14}: max rel err {r.max_rel_err:.3e} at {r.worst_param} [{status}]")
    return 1 if failed else 0


def cmd_fit(args) -> int:
    config = _model_config(args)
    frames, sentences = generate(_video_spec(args, config))
    model = SpaCompressor(config)
    losses = fit(model, frames, sentences, FitConfig(args.steps, args.lr, args.seed))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("step,loss\n")
            for i, value in enumerate(losses):
                fh.write(f"{i},{value!r}\n")
    print(f"initial loss {losses[0]:.6f}  final loss {losses[-1]:.6f}")
    if losses[-1] > 0.5 * losses[0]:
        print("fit did not halve the initial loss", file=sys.stderr)
        return 1
    return 0


def cmd_golden(args) -> int:
    cases = golden.load_manifest(args.manifest)
    if args.action == "emit":
        for path in golden.emit(cases, args.dir):
            print(f"wrote {path}")
        return 0
    results = golden.verify(cases, args.dir)
    failed = False
    for r in results:
        print(f"{r.name}: {'ok' if r.ok else 'FAIL'} ({r.detail})")
        failed |= not r.ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spa", description="hierarchical scene/event token compressor")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--precision", choices=("f32", "f64"), default="f64")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ratio", help="compression ratio analytics")
    p.add_argument("--s", type=float)
    p.add_argument("--e", type=float)
    p.add_argument("--n-avg", type=float, default=analytics.DEFAULT_FRAMES_PER_SENTENCE)
    p.add_argument("--dv", type=float, default=analytics.DEFAULT_VISUAL_TOKENS_PER_FRAME)
    p.add_argument("--grid", help="'s1,s2,...xe1,e2,...' sweep specification")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("run", help="compress a video manifest")
    _add_model_flags(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic video manifest")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--sentences", type=int, default=2)
    p.add_argument("--l-v", type=int, default=TOY["vision_tokens_per_frame"])
    p.add_argument("--d", type=int, default=TOY["dim"])
    p.add_argument("--l-s-min", type=int, default=2)
    p.add_argument("--l-s-max", type=int, default=4)
    p.add_argument("--step", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _add_model_flags(p)
    p.add_argument("--frames", type=int, default=2)
    p.add_argument("--sentences", type=int, default=1)
    p.add_argument("--video-seed", type=int)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--freeze", action="append", default=[], help="parameter group to freeze")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("fit", help="toy compressor-only training loop")
    _add_model_flags(p)
    p.add_argument("--frames", type=int, default=2)
    p.add_argument("--sentences", type=int, default=1)
    p.add_argument("--video-seed", type=int)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--out", type=Path, help="loss-curve CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("golden", help="regression snapshots")
    p.add_argument("action", choices=("emit", "verify"))
    p.add_argument("--manifest", type=Path, default=Path("golden_manifest.ini"))
    p.add_argument("--dir", type=Path, required=True)
    p.set_defaults(func=cmd_golden)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
