"""Batch command line: shadow-map generation, metric evaluation, forward smoke test.

Exit status is 0 only when no per-file error occurred. All outputs are
deterministic functions of the inputs, flags, and seed; nothing is written
outside the chosen output locations. Flag defaults can be overridden with
environment variables prefixed ``SPOTSHIFT_`` (for example
``SPOTSHIFT_MAX_RADIUS=20``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DEFAULT_MAX_RADIUS, ENV_PREFIX
from .imgio import read_mask, write_gray_map
from .metrics import PairingError, evaluate_directory, report_to_csv, report_to_json
from .shadow import (
    DilationConfig,
    compute_radii,
    extract_edge,
    generate_cosupervision_target,
    resolve_spotlights,
)
from .net.model import NetConfig, ReferenceNet, make_pyramid


def _env(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name, fallback)


def _env_int(name: str) -> int | None:
    value = os.environ.get(ENV_PREFIX + name)
    return int(value) if value is not None else None


def _checksum(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()[:16]


def _dilation_config(args) -> DilationConfig:
    if args.config:
        base = DilationConfig.from_file(args.config)
    else:
        base = DilationConfig()
    max_radius = base.max_radius if args.max_radius is None else args.max_radius
    spotlights = base.spotlights
    if args.spotlights is not None:
        spotlights = tuple(c.strip() for c in args.spotlights.split(",") if c.strip())
    degenerate = base.degenerate_radius if args.degenerate_radius is None else args.degenerate_radius
    return DilationConfig(max_radius=max_radius, spotlights=spotlights, degenerate_radius=degenerate)


def _generate_one(name: str, mask_path: Path, out_dir: Path, cfg: DilationConfig):
    mask = read_mask(mask_path)
    target = generate_cosupervision_target(mask, cfg)
    write_gray_map(out_dir / f"{name}.png", target)

    height, width = mask.shape
    edge = extract_edge(mask)
    spot_stats = []
    for corner, point in zip(cfg.spotlights, resolve_spotlights(cfg, height, width)):
        radii = [r for _, r in compute_radii(edge, point, cfg)]
        stats = {"corner": corner, "x": point.x, "y": point.y, "edge_pixels": len(radii)}
        if radii:
            stats.update(
                radius_min=int(min(radii)),
                radius_max=int(max(radii)),
                radius_mean=round(float(np.mean(radii)), 6),
            )
        spot_stats.append(stats)
    return {
        "name": f"{name}.png",
        "size": [width, height],
        "foreground_pixels": int(mask.sum()),
        "spotlights": spot_stats,
    }


def cmd_generate(args) -> int:
    in_dir = Path(args.input)
    out_dir = Path(args.output)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = _dilation_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    masks = sorted(in_dir.glob("*.png"))
    if not masks:
        print(f"error: no PNG masks in {in_dir}", file=sys.stderr)
        return 1
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(path: Path):
        try:
            return _generate_one(path.stem, path, out_dir, cfg)
        except Exception as exc:
            return (path.name, str(exc))

    if args.threads == 1:
        results = [run(p) for p in masks]
    else:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, masks))

    entries = [r for r in results if isinstance(r, dict)]
    failures = [r for r in results if not isinstance(r, dict)]
    for name, reason in failures:
        print(f"skipped {name}: {reason}", file=sys.stderr)

    manifest = {
        "config": {
            "max_radius": cfg.max_radius,
            "spotlights": list(cfg.spotlights),
            "degenerate_radius": cfg.effective_degenerate_radius,
        },
        "images": entries,
        "skipped": [{"name": name, "reason": reason} for name, reason in failures],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(entries)} shadow maps to {out_dir}")
    return 0 if not failures else 1


def cmd_evaluate(args) -> int:
    try:
        report = evaluate_directory(args.pred, args.gt, threads=args.threads)
    except (PairingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report_to_csv(report) if args.format == "csv" else report_to_json(report)
    out_path = Path(args.output)
    if out_path.parent != Path("."):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(text)
    for name in report.missing_ground_truth:
        print(f"warning: no ground truth for {name}", file=sys.stderr)
    for name in report.missing_predictions:
        print(f"warning: no prediction for {name}", file=sys.stderr)
    for name, reason in report.skipped:
        print(f"skipped {name}: {reason}", file=sys.stderr)
    agg = report.aggregate
    print(
        f"images={agg.count} s_measure={agg.s_measure:.6f} e_measure={agg.e_measure:.6f} "
        f"weighted_f={agg.weighted_f:.6f} mae={agg.mae:.6f}"
    )
    return 0 if report.ok else 1


def cmd_smoke(args) -> int:
    config = NetConfig(
        backbone_channels=args.channels,
        shadow_channels=args.channels,
        attn_channels=args.channels,
        stage_channels=args.channels,
        heads=args.heads,
        seed=args.seed,
    )
    try:
        net = ReferenceNet(config)
        pyramid = make_pyramid(args.seed, channels=args.channels, base_size=args.base_size)
        result = net.forward(pyramid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    listing = [
        ("shadow_feature", result.shadow_feature),
        ("pred_shadow", result.pred_shadow),
        ("stage2", result.stage_features[0]),
        ("stage3", result.stage_features[1]),
        ("stage4", result.stage_features[2]),
        ("pred_mask", result.pred_mask),
    ]
    for name, arr in listing:
        shape = "x".join(str(s) for s in arr.shape)
        print(f"{name} {shape} sha256={_checksum(arr)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spotshift",
        description="Shadow-map synthesis, foreground-map metrics, and a forward smoke test.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize shadow-map PNGs for a directory of masks")
    gen.add_argument("--input", required=True, help="directory of ground-truth mask PNGs")
    gen.add_argument("--output", required=True, help="directory for shadow-map PNGs and manifest.json")
    gen.add_argument("--config", default=None, help="key=value file with dilation settings")
    gen.add_argument(
        "--max-radius", type=int, default=_env_int("MAX_RADIUS"),
        help=f"largest dilation radius (default {DEFAULT_MAX_RADIUS})",
    )
    gen.add_argument(
        "--spotlights", default=_env("SPOTLIGHTS", None),
        help="comma-separated corners from tl,tr,bl,br (default tl,br)",
    )
    gen.add_argument("--degenerate-radius", type=int, default=None)
    gen.add_argument("--threads", type=int, default=int(_env("THREADS", "1")))
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="score predictions against ground truth")
    ev.add_argument("--pred", required=True, help="directory of prediction PNGs")
    ev.add_argument("--gt", required=True, help="directory of ground-truth PNGs")
    ev.add_argument("--output", required=True, help="report file to write")
    ev.add_argument("--format", choices=("csv", "json"), default=_env("FORMAT", "csv"))
    ev.add_argument("--threads", type=int, default=int(_env("THREADS", "1")))
    ev.set_defaults(func=cmd_evaluate)

    smoke = sub.add_parser("smoke", help="run the seeded forward pass and print shapes/checksums")
    smoke.add_argument("--seed", type=int, default=0)
    smoke.add_argument("--channels", type=int, default=32)
    smoke.add_argument("--heads", type=int, default=4)
    smoke.add_argument("--base-size", type=int, default=32)
    smoke.set_defaults(func=cmd_smoke)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
