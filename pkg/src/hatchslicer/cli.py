"""Command line entry point: ``hatchslicer slice | predict | init-config``."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import sys

import numpy as np

from .config import default_config_json, load_config
from .errors import HatchSlicerError
from .halftone import HalftoneParams, response_grid, write_response_csv

log = logging.getLogger("hatchslicer")

EXIT_OK, EXIT_INTERNAL, EXIT_BAD_INPUT = 0, 1, 2


def cmd_slice(config_path, threads: int | None = None) -> int:
    from .pipeline import run_job

    cfg = load_config(config_path)
    result = run_job(cfg, threads=threads)
    totals = result.report["totals"]
    log.info(
        "%d layers, %d paths, %.3f mm3 extruded; outputs in %s",
        result.report["layer_count"],
        totals["paths"],
        totals["extruded_volume_mm3"],
        cfg.output_path,
    )
    return EXIT_OK


def predict_axes(phi_min: float, phi_max: float, steps: int, r_steps: int):
    """Viewing offsets (radians) and tones for the response grid."""
    phis = np.radians(np.linspace(phi_min, phi_max, steps))
    rs = np.linspace(0.0, 1.0, r_steps) if r_steps > 1 else np.array([0.5])
    return phis, rs


def cmd_predict(
    n_degrees: float,
    phi_min: float,
    phi_max: float,
    steps: int,
    r_steps: int,
    params: HalftoneParams,
    out,
) -> int:
    if not 0 <= n_degrees < 90:
        raise HatchSlicerError(f"surface angle must lie in [0, 90) degrees, got {n_degrees}")
    if not -180 <= phi_min <= phi_max <= 180:
        raise HatchSlicerError(f"bad viewing range {phi_min}:{phi_max}")
    if steps < 1 or r_steps < 1 or (steps == 1 and phi_min != phi_max):
        raise HatchSlicerError("steps and r-steps must be positive (one step needs an empty range)")
    phis, rs = predict_axes(phi_min, phi_max, steps, r_steps)
    grid = response_grid(math.radians(n_degrees), phis, rs, params)
    write_response_csv(out, phis, rs, grid)
    return EXIT_OK


def _phi_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hatchslicer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", parents=[common], help="slice a textured mesh into hatched dual-extrusion G-code")
    p.add_argument("--config", required=True, help="job configuration (JSON)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")

    p = sub.add_parser("predict", parents=[common], help="write the predicted tone response grid as CSV")
    p.add_argument("--n", type=float, default=0.0, help="surface angle in degrees")
    p.add_argument("--phi-range", type=_phi_range, default=(-80.0, 80.0), help="viewing offset range MIN:MAX")
    p.add_argument("--steps", type=int, default=33, help="number of viewing offsets")
    p.add_argument("--r-steps", type=int, default=11, help="number of tones between 0 and 1")
    p.add_argument("--h", type=float, default=0.1, help="layer thickness (mm)")
    p.add_argument("--w-full", type=float, default=0.2, help="full-occlusion overhang (mm)")
    p.add_argument("--line-width", type=float, default=0.35, help="line width (mm)")
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    sub.add_parser("init-config", parents=[common], help="print the default job configuration")
    return parser


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "-80:80" as an option; glue it to its flag
    out = []
    it = iter(range(len(argv)))
    for i in it:
        if argv[i] == "--phi-range" and i + 1 < len(argv):
            out.append(f"--phi-range={argv[i + 1]}")
            next(it, None)
        else:
            out.append(argv[i])
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "init-config":
            sys.stdout.write(default_config_json())
            return EXIT_OK
        if args.command == "slice":
            if args.threads is not None and args.threads < 1:
                raise HatchSlicerError("--threads must be at least 1")
            return cmd_slice(args.config, args.threads)
        params = HalftoneParams(h=args.h, w_full=args.w_full, line_width=args.line_width)
        phi_min, phi_max = args.phi_range
        if args.out == "-":
            return cmd_predict(args.n, phi_min, phi_max, args.steps, args.r_steps, params, sys.stdout)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            return cmd_predict(args.n, phi_min, phi_max, args.steps, args.r_steps, params, fh)
    except (HatchSlicerError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        # parameter validation in constructors
        log.error("invalid input: %s", exc)
        return EXIT_BAD_INPUT
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL
    finally:
        with contextlib.suppress(Exception):
            sys.stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
