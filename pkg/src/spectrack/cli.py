"""Command-line entry point: track a sequence, evaluate results, self-verify.

Config files are flat `key = value` text ('#' comments allowed); every key is
optional and mirrors a TrackerConfig field. A previous run's manifest.json
can be passed wherever a config file is accepted, which reproduces that run
exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (
    Sequence,
    SequenceFormatError,
    evaluate,
    list_frame_paths,
    load_image,
    load_sequence,
    parse_rect_line,
    read_boxes_file,
    write_boxes_file,
    write_result_csv,
    write_result_json,
)
from .features import Channel, FeatureSpec
from .grid_graph import (
    LambdaMaxMode,
    NeighborhoodSpec,
    NonConvergenceError,
    Pattern,
    Weighting,
)
from .selftest import run_selftest
from .tracker import TrackerConfig, init_tracker, track_frame

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_IO = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    """A config file entry failed to parse or validate."""


def _parse_channels(value: str) -> tuple[Channel, ...]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    by_value = {ch.value: ch for ch in Channel}
    try:
        return tuple(by_value[n] for n in names)
    except KeyError as err:
        raise ValueError(f"unknown channel {err.args[0]!r} (choose from {sorted(by_value)})")


def _parse_enum(enum_cls):
    by_value = {member.value: member for member in enum_cls}

    def parse(value: str):
        try:
            return by_value[value.strip()]
        except KeyError:
            raise ValueError(f"expected one of {sorted(by_value)}, got {value!r}")

    return parse


_CONFIG_PARSERS = {
    "pattern": _parse_enum(Pattern),
    "skip_step": int,
    "weighting": _parse_enum(Weighting),
    "gaussian_sigma": float,
    "channels": _parse_channels,
    "grid_size": int,
    "hog_bins": int,
    "hog_cell": int,
    "gamma": float,
    "alpha": float,
    "search_factor": float,
    "label_sigma_ratio": float,
    "scale_count": int,
    "scale_step": float,
    "lambda_max_mode": _parse_enum(LambdaMaxMode),
    "k_cap": int,
    "pca_dim": int,
    "seed": int,
}


def config_to_dict(config: TrackerConfig) -> dict:
    """Flat, JSON-friendly view of a resolved config (manifest payload)."""
    return {
        "pattern": config.neighborhood.pattern.value,
        "skip_step": config.neighborhood.skip_step,
        "weighting": config.neighborhood.weighting.value,
        "gaussian_sigma": config.neighborhood.gaussian_sigma,
        "channels": ",".join(ch.value for ch in config.feature_spec.channels),
        "grid_size": config.feature_spec.grid_size,
        "hog_bins": config.feature_spec.hog_bins,
        "hog_cell": config.feature_spec.hog_cell,
        "gamma": config.gamma,
        "alpha": config.alpha,
        "search_factor": config.search_factor,
        "label_sigma_ratio": config.label_sigma_ratio,
        "scale_count": config.scale_count,
        "scale_step": config.scale_step,
        "lambda_max_mode": config.lambda_max_mode.value,
        "k_cap": config.k_cap,
        "pca_dim": config.pca_dim,
        "seed": config.seed,
    }


def resolve_config(entries: dict) -> TrackerConfig:
    """Build a TrackerConfig from flat key/value entries (all keys optional)."""
    parsed = {}
    for key, raw in entries.items():
        if key not in _CONFIG_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        if raw is None:
            continue
        try:
            parsed[key] = _CONFIG_PARSERS[key](raw) if isinstance(raw, str) else _CONFIG_PARSERS[key](str(raw))
        except (ValueError, TypeError) as err:
            raise ConfigError(f"config key {key!r}: {err}") from err

    try:
        neighborhood = NeighborhoodSpec(
            pattern=parsed.get("pattern", Pattern.CASE3_SKIP4CONN),
            skip_step=parsed.get("skip_step"),
            weighting=parsed.get("weighting", Weighting.BINARY01),
            gaussian_sigma=parsed.get("gaussian_sigma"),
        )
        feature_defaults = FeatureSpec()
        feature_spec = FeatureSpec(
            channels=parsed.get("channels", feature_defaults.channels),
            grid_size=parsed.get("grid_size", feature_defaults.grid_size),
            hog_bins=parsed.get("hog_bins", feature_defaults.hog_bins),
            hog_cell=parsed.get("hog_cell", feature_defaults.hog_cell),
        )
        defaults = TrackerConfig()
        return TrackerConfig(
            neighborhood=neighborhood,
            feature_spec=feature_spec,
            gamma=parsed.get("gamma", defaults.gamma),
            alpha=parsed.get("alpha", defaults.alpha),
            search_factor=parsed.get("search_factor", defaults.search_factor),
            label_sigma_ratio=parsed.get("label_sigma_ratio", defaults.label_sigma_ratio),
            scale_count=parsed.get("scale_count", defaults.scale_count),
            scale_step=parsed.get("scale_step", defaults.scale_step),
            lambda_max_mode=parsed.get("lambda_max_mode", defaults.lambda_max_mode),
            k_cap=parsed.get("k_cap", defaults.k_cap),
            pca_dim=parsed.get("pca_dim", defaults.pca_dim),
            seed=parsed.get("seed", defaults.seed),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def parse_config_text(text: str) -> dict:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        entries[key] = value
    return entries


def load_config_file(path) -> TrackerConfig:
    """Load a config from key/value text or from a run manifest (JSON)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        entries = payload.get("config", payload)
    else:
        entries = parse_config_text(text)
    return resolve_config(entries)


def _load_frames_only(seq_dir) -> Sequence:
    frames = list_frame_paths(seq_dir)
    return Sequence(
        name=Path(seq_dir).name, frame_paths=frames, ground_truth=[None] * len(frames)
    )


def _write_manifest(out_dir: Path, config: TrackerConfig, seq_dir) -> None:
    manifest = {
        "tool": "spectrack",
        "version": __version__,
        "sequence": str(Path(seq_dir).resolve()),
        "output_dir": str(out_dir.resolve()),
        "seed": config.seed,
        "config": config_to_dict(config),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_track(args) -> int:
    config = load_config_file(args.config) if args.config else TrackerConfig()

    if args.init:
        init_box = parse_rect_line(args.init)
        if init_box is None:
            raise ConfigError("--init must be four finite numbers x,y,w,h")
        sequence = _load_frames_only(args.sequence)
    else:
        sequence = load_sequence(args.sequence)
        init_box = sequence.ground_truth[0]
        if init_box is None:
            raise SequenceFormatError(
                f"{sequence.name}: first ground-truth box is NaN; pass --init x,y,w,h"
            )

    out_dir = Path(args.out) if args.out else Path("runs") / sequence.name
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, config, args.sequence)

    started = time.perf_counter()
    state = init_tracker(load_image(sequence.frame_paths[0]), init_box, config)
    boxes = [init_box]
    for frame_path in sequence.frame_paths[1:]:
        state, box = track_frame(state, load_image(frame_path))
        boxes.append(box)
    elapsed = time.perf_counter() - started

    boxes_path = out_dir / "boxes.txt"
    write_boxes_file(boxes, boxes_path)
    stats = {
        "n_frames": len(boxes),
        "elapsed_seconds": elapsed,
        "frames_per_second": len(boxes) / elapsed if elapsed > 0 else float("inf"),
    }
    (out_dir / "stats.json").write_text(json.dumps(stats, indent=2) + "\n")
    print(
        f"tracked {len(boxes)} frames of {sequence.name!r} "
        f"in {elapsed:.2f}s ({stats['frames_per_second']:.1f} fps) -> {boxes_path}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    boxes = read_boxes_file(args.boxes)
    sequence = load_sequence(args.sequence)
    result = evaluate(boxes, sequence)

    out_dir = Path(args.out) if args.out else Path("eval") / sequence.name
    out_dir.mkdir(parents=True, exist_ok=True)
    write_result_json(result, out_dir / "result.json", name=sequence.name)
    write_result_csv(result, out_dir / "result.csv")
    print(
        f"{sequence.name}: precision@20 = {result.precision_at_20:.4f}, "
        f"success AUC = {result.success_auc:.4f}, mean CLE = {result.mean_cle:.2f}px "
        f"({result.n_frames} frames, {result.n_excluded} excluded) -> {out_dir}"
    )
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectrack",
        description="Grid-graph spectral filter tracker and OTB-style evaluation harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker over an image sequence")
    p_track.add_argument("sequence", help="sequence directory (<seq>/img/*.jpg + groundtruth_rect.txt)")
    p_track.add_argument("--config", help="config file (key = value lines) or a manifest.json")
    p_track.add_argument(
        "--init",
        help="initial box 'x,y,w,h' (1-based, as in ground-truth files); "
        "required when the sequence has no ground-truth file",
    )
    p_track.add_argument("--out", help="output directory (default runs/<sequence>)")
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="score tracker output against ground truth")
    p_eval.add_argument("boxes", help="tracker output boxes file")
    p_eval.add_argument("sequence", help="sequence directory with ground truth")
    p_eval.add_argument("--out", help="output directory (default eval/<sequence>)")
    p_eval.set_defaults(func=cmd_eval)

    p_self = sub.add_parser("selftest", help="run the built-in verification suite")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SequenceFormatError, json.JSONDecodeError) as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as err:
        print(f"IO error: {err}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, NonConvergenceError, FloatingPointError) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
