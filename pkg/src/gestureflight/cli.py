"""Command line entry point: fly missions, inspect logs, dump the Gabor
bank, and serve the ground-control API."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import PipelineConfig, ZERO_NOISE, load_config
from .gabor import bank_params, gabor_bank
from .sim import (
    MissionSpec,
    mission_params,
    mission_reference,
    read_log,
    run_mission,
    track_displacement,
    write_log,
)

DATA_DIR_ENV = "GESTUREFLIGHT_DATA_DIR"


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "zero_noise", False):
        from dataclasses import replace
        cfg = replace(cfg, noise=ZERO_NOISE)
    return cfg


def _add_mission_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=("rectangle", "l_shape"), default="rectangle")
    p.add_argument("--width", type=float, default=8.0)
    p.add_argument("--height", type=float, default=4.0)
    p.add_argument("--altitude", type=float, default=1.5)


def cmd_mission(args) -> int:
    cfg = _load_cfg(args)
    spec = MissionSpec(args.kind, args.width, args.height, args.altitude)
    log = run_mission(spec, cfg, seed=args.seed)
    write_log(log, args.out)
    report = track_displacement(log, mission_reference(spec, mission_params(cfg, spec)))
    print(f"{args.kind} seed={args.seed}: {len(log.rows)} ticks, "
          f"{log.rows[-1].t:.2f} s simulated")
    print(f"max |error| per axis [m]: "
          + " ".join(f"{e:.4f}" for e in report.max_abs_error))
    print(f"rmse per axis [m]:        "
          + " ".join(f"{e:.4f}" for e in report.rmse))
    print(f"path length [m]: {report.path_length:.2f}")
    print(f"log written to {args.out}")
    return 0


def cmd_report(args) -> int:
    log = read_log(args.log)
    if not log.rows:
        print("empty log")
        return 1
    last = log.rows[-1]
    segments = {r.segment for r in log.rows if r.segment is not None}
    rejections = [r.event for r in log.rows if r.event.startswith("rejected")]
    print(f"{len(log.rows)} ticks over {last.t:.2f} s, "
          f"{len(segments)} segments, {len(rejections)} rejections")
    print(f"final true position  [m]: "
          + " ".join(f"{x:.4f}" for x in last.true_p))
    print(f"final est. position  [m]: "
          + " ".join(f"{x:.4f}" for x in last.est_p))
    if args.kind is not None:
        spec = MissionSpec(args.kind, args.width, args.height, args.altitude)
        report = track_displacement(log, mission_reference(spec))
        print(f"max |error| per axis [m]: "
              + " ".join(f"{e:.4f}" for e in report.max_abs_error))
        print(f"rmse per axis [m]:        "
              + " ".join(f"{e:.4f}" for e in report.rmse))
    for event in rejections:
        print(f"  {event}")
    return 0


def cmd_gabor_dump(args) -> int:
    bank = gabor_bank(n_orientations=args.orientations,
                      wavelengths=args.wavelengths,
                      ksize=args.ksize)
    params = bank_params(n_orientations=args.orientations,
                         wavelengths=args.wavelengths,
                         ksize=args.ksize)
    if args.out:
        np.savez(args.out, bank=bank)
        print(f"bank shape {bank.shape} written to {args.out}")
        return 0
    for i, p in enumerate(params):
        header = {"channel": i, "theta": round(p.theta, 6),
                  "wavelength": p.wavelength}
        print(json.dumps(header))
        for row in bank[:, :, 0, i]:
            print("  " + " ".join(format(v, " .12f") for v in row))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV) or "gcs-data"
    app = create_app(data_dir=data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gestureflight",
        description="gesture-to-flight pipeline against a simulated micro-drone")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mission", help="fly a mission and write its flight log")
    _add_mission_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--zero-noise", action="store_true",
                   help="disable actuation and IMU noise")
    p.add_argument("--out", default="flight.ndjson")
    p.set_defaults(func=cmd_mission)

    p = sub.add_parser("report", help="summarize a flight log")
    p.add_argument("log")
    p.add_argument("--kind", choices=("rectangle", "l_shape"),
                   help="compare against this mission's reference path")
    p.add_argument("--width", type=float, default=8.0)
    p.add_argument("--height", type=float, default=4.0)
    p.add_argument("--altitude", type=float, default=1.5)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gabor-dump", help="print or save the Gabor stem bank")
    p.add_argument("--orientations", type=int, default=8)
    p.add_argument("--wavelengths", type=float, nargs="+", default=[2.0, 4.0])
    p.add_argument("--ksize", type=int, default=3)
    p.add_argument("--out", help="write an .npz instead of printing")
    p.set_defaults(func=cmd_gabor_dump)

    p = sub.add_parser("serve", help="run the ground-control HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", help=f"log directory (or ${DATA_DIR_ENV})")
    p.add_argument("--log-level", default="info")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
