"""
Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data or parse error,
3 calibration failed (always) or degenerate (with ``--strict``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .calibration import (
    calibrate_frame,
    compute_cost_surface,
    reconstruct_point_cloud,
    track_offsets,
)
from .errors import CalibrationFailedError, DriftEstimationError, MemsCalError
from .io import (
    calibration_summary,
    config_from_dict,
    load_config,
    read_range_stream,
    write_cost_surface,
    write_drift_report,
    write_point_cloud,
    write_range_stream,
    write_truth,
)
from .simulator import NoiseSpec, simulate_frames

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CALIBRATION = 0, 1, 2, 3

log = logging.getLogger("memscal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(args):
    out = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        out.append(f"noise.seed={args.seed}")
    if getattr(args, "frames", None) is not None:
        out.append(f"run.n_frames={args.frames}")
    if getattr(args, "out", None) is not None:
        out.append(f"run.output_dir={json.dumps(str(args.out))}")
    return out


def _config(args):
    overrides = _overrides(args)
    if args.config is None:
        from .io import apply_overrides

        return config_from_dict(apply_overrides({}, overrides))
    return load_config(args.config, overrides)


def _out_dir(cfg):
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def _stream_and_frame(args, cfg):
    stream = read_range_stream(args.stream)
    if not 0 <= args.frame < stream.n_frames:
        raise MemsCalError(f"frame {args.frame} not in stream with {stream.n_frames} frames")
    if stream.delta_t != cfg.pattern.delta_t:
        log.warning("stream delta_t %g differs from config %g; using the stream's", stream.delta_t, cfg.pattern.delta_t)
    return stream, stream.frames[args.frame]


def cmd_simulate(args, cfg):
    noise = NoiseSpec.none(cfg.noise.rng_seed) if args.noiseless else cfg.noise
    stream = simulate_frames(cfg.scene, cfg.pattern, cfg.misalignment, noise, cfg.n_frames)
    out = _out_dir(cfg)
    write_range_stream(stream, out / "stream.csv")
    write_truth(cfg, out / "truth.json")
    print(f"wrote {stream.n_frames} frame(s) x {stream.pulses_per_frame} pulses to {out / 'stream.csv'}")
    return EXIT_OK


def cmd_calibrate(args, cfg):
    stream, frame = _stream_and_frame(args, cfg)
    result = calibrate_frame(frame, cfg.search, cfg.pattern, cost=args.cost)
    result.t_s = stream.delta_t * result.m_star
    out = _out_dir(cfg)
    summary = calibration_summary(result)
    (out / "calibration.json").write_text(json.dumps(summary, indent=2) + "\n")
    write_cost_surface(result.cost_surface, out / "cost_surface.csv")
    cloud = reconstruct_point_cloud(frame, result.m_star, result.k_star, cfg.pattern)
    write_point_cloud(cloud, out / f"cloud.{args.format}", args.format)
    print(json.dumps(summary))
    if result.degenerate:
        log.warning("cost surface is degenerate: (m, k) is not identifiable from this frame")
        if args.strict:
            return EXIT_CALIBRATION
    return EXIT_OK


def cmd_track(args, cfg):
    stream = read_range_stream(args.stream)
    est = track_offsets(stream, cfg.search, cfg.pattern, probe_frames=args.probe_frames)
    out = _out_dir(cfg)
    write_drift_report(est, out / "drift.txt")
    print(f"t_e = {est.t_e:.9g} s  signed_slope = {est.signed_slope:.9g} s/frame  k = {est.k_star}")
    if args.strict and (est.excluded_frames or est.degenerate_frames):
        return EXIT_CALIBRATION
    return EXIT_OK


def cmd_reconstruct(args, cfg):
    _, frame = _stream_and_frame(args, cfg)
    cloud = reconstruct_point_cloud(frame, args.m, args.k, cfg.pattern)
    out = _out_dir(cfg)
    path = out / f"cloud.{args.format}"
    write_point_cloud(cloud, path, args.format)
    print(f"wrote {len(cloud)} points to {path}")
    return EXIT_OK


def cmd_surface(args, cfg):
    _, frame = _stream_and_frame(args, cfg)
    surface = compute_cost_surface(frame, cfg.search, cfg.pattern.serpentine, cost=args.cost)
    out = _out_dir(cfg)
    write_cost_surface(surface, out / "cost_surface.csv")
    print(f"wrote {surface.cost.size} cells to {out / 'cost_surface.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", type=Path, help="TOML run configuration")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="noise RNG seed")
    common.add_argument("--frames", type=int, help="number of frames to simulate")
    common.add_argument("--strict", action="store_true", help="exit 3 on degenerate or failed calibration")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="memscal", description="MEMS LiDAR time-synchronization simulator and self-calibration")
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="config -> range stream + ground-truth sidecar")
    p.add_argument("--noiseless", action="store_true", help="ignore the [noise] section")
    p.set_defaults(func=cmd_simulate)

    def with_stream(p):
        p.add_argument("stream", type=Path, help="range stream CSV")
        p.add_argument("--frame", type=int, default=0, help="frame index (default 0)")

    p = sub.add_parser("calibrate", parents=[common], help="range stream -> (m, k), cost surface, corrected cloud")
    with_stream(p)
    p.add_argument("--format", choices=["xyz", "ply"], default="xyz")
    p.add_argument("--cost", choices=["mvg", "tv"], default="mvg")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("track", parents=[common], help="multi-frame stream -> drift report")
    p.add_argument("stream", type=Path)
    p.add_argument("--probe-frames", type=int, default=5,
                   help="frames used for the k pass (0 = all)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("reconstruct", parents=[common], help="stream + explicit m, k -> point cloud")
    with_stream(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--format", choices=["xyz", "ply"], default="xyz")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("surface", parents=[common], help="dump the full cost surface")
    with_stream(p)
    p.add_argument("--cost", choices=["mvg", "tv"], default="mvg")
    p.set_defaults(func=cmd_surface)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "probe_frames", None) == 0:
        args.probe_frames = None
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (CalibrationFailedError, DriftEstimationError) as exc:
        print(f"memscal: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (MemsCalError, OSError) as exc:
        print(f"memscal: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
