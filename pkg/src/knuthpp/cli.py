"""Command-line entry point: ``knuthpp {generate,analyze,compare-binning,envelope}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .core import RandomStream
from .errors import ConfigError, PatternError
from .io import parse_window, read_pattern_csv, write_csv, write_curve_csv, write_pattern_csv
from .pipeline import (
    DEFAULT_GENERATOR_WINDOW,
    EXIT_CONFIG,
    EXIT_OK,
    GENERATOR_KEYS,
    build_generator,
    run_config_file,
)
from .secondstats import compute_statistic, crossing_scale, csr_envelope, default_pcf_bandwidth
from .stone import gaussian_comparison_study


def _key_values(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_generate(args) -> int:
    window = parse_window(args.window)
    make = build_generator(args.process, _key_values(args.param), window)
    pattern = make(RandomStream(args.seed))
    write_pattern_csv(pattern, args.output)
    print(f"wrote {pattern.n} points to {args.output}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    result = run_config_file(args.config, args.output_dir, args.workers)
    if result.exit_code == EXIT_CONFIG:
        print(f"config error: {result.message}", file=sys.stderr)
    else:
        print(f"outputs in {result.output_dir}: {result.message}")
        for failure in result.manifest["failures"]:
            print(f"  {failure['species']} [{failure['analysis']}] {failure['error']}", file=sys.stderr)
    return result.exit_code


def cmd_compare_binning(args) -> int:
    rows = gaussian_comparison_study(args.datasets, args.n, args.seed, args.c, args.step)
    if args.output:
        write_csv(
            args.output,
            ["dataset", "knuth_m", "stone_m", "knuth_l1", "knuth_l2", "stone_l1", "stone_l2"],
            ([r.dataset, r.knuth_m, r.stone_m, r.knuth_l1, r.knuth_l2, r.stone_l1, r.stone_l2] for r in rows),
        )
    wins = sum(r.knuth_l2 <= r.stone_l2 for r in rows)
    ratio = np.mean([r.stone_l2 / r.knuth_l2 for r in rows])
    print(f"datasets={len(rows)} knuth_l2<=stone_l2 in {wins} ({wins / len(rows):.0%})")
    print(f"median M knuth={np.median([r.knuth_m for r in rows]):g} stone={np.median([r.stone_m for r in rows]):g}")
    print(f"mean stone/knuth L2 ratio={ratio:.3f}")
    return EXIT_OK


def cmd_envelope(args) -> int:
    window = parse_window(args.window) if args.window else None
    pattern = read_pattern_csv(args.input, window)
    start = args.r_min
    if start is None:
        start = args.bandwidth if args.bandwidth is not None else default_pcf_bandwidth(pattern)
    r_max = args.r_max if args.r_max is not None else 0.5 * min(pattern.window.width, pattern.window.height)
    r = np.linspace(start, r_max, args.n_points)
    curve = compute_statistic(pattern, args.statistic, r, args.bandwidth)
    band = csr_envelope(pattern, args.statistic, r, args.n_sims, args.level, RandomStream(args.seed), args.bandwidth)
    write_curve_csv(curve, args.output, band)
    outside = int((~band.contains(curve.values)).sum())
    msg = f"{args.statistic}: {outside}/{len(curve.r_grid)} grid points outside the {args.level:g} CSR envelope"
    if args.statistic == "g":
        msg += f"; first crossing of 1 at r={crossing_scale(curve)}"
    print(msg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knuthpp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a point process to CSV")
    p.add_argument("process", choices=sorted(GENERATOR_KEYS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="process parameter (repeatable)")
    p.add_argument("--window", default=DEFAULT_GENERATOR_WINDOW, help="x_min,x_max,y_min,y_max or WxH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="run the analyses listed in a config file")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare-binning", help="1D Knuth vs Stone study on Gaussian samples")
    p.add_argument("--datasets", type=int, default=50)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=int, default=100, help="largest bin count tried")
    p.add_argument("--step", type=float, default=1e-3, help="quadrature step")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_compare_binning)

    p = sub.add_parser("envelope", help="statistic of a pattern with its CSR envelope")
    p.add_argument("input", type=Path)
    p.add_argument("--statistic", choices=["K", "L", "g", "K2"], default="g")
    p.add_argument("--n-sims", type=int, default=199)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-points", type=int, default=512)
    p.add_argument("--bandwidth", type=float, help="pair-correlation kernel half-width")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_envelope)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PatternError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
