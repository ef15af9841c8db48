"""Command-line interface: batch simulation campaigns and figure rendering."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import parse_config
from .errors import CfrisError
from .runner import SweepSpec, run_campaign

_ARCH_CHOICES = ("sc", "gc2", "gc4", "fc")


def _parse_sweep(text: str) -> SweepSpec:
    """Parse 'pmax=START:STEP:STOP' into a power grid (inclusive stop)."""
    try:
        name, spec = text.split("=", 1)
        if name != "pmax":
            raise ValueError(f"unknown sweep variable {name!r}")
        start_s, step_s, stop_s = spec.split(":")
        start, step, stop = float(start_s), float(step_s), float(stop_s)
        if step <= 0:
            raise ValueError("sweep step must be positive")
    except ValueError as exc:
        raise CfrisError(f"bad sweep spec {text!r}: {exc}") from None
    grid = []
    p = start
    while p <= stop + 1e-9:
        grid.append(round(p, 9))
        p += step
    return SweepSpec(p_max_grid=tuple(grid))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfris",
        description="Cell-free MIMO downlink simulation with reciprocal "
        "beyond-diagonal scattering surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo campaign")
    run_p.add_argument("--config", required=True, help="path to a JSON scenario config")
    run_p.add_argument("--trials", type=int, default=None, help="override trial count")
    run_p.add_argument("--seed", type=int, default=None, help="override master seed")
    run_p.add_argument("--out", default=".", help="output directory for CSV files")
    run_p.add_argument("--arch", choices=_ARCH_CHOICES, default=None,
                       help="override the architecture of every surface")
    run_p.add_argument("--sweep", default=None, help="sweep spec, e.g. pmax=0:4:16")
    run_p.add_argument("--baselines", default=None,
                       help="comma-separated baselines (mmse,pa)")
    run_p.add_argument("--timing", action="store_true",
                       help="record per-stage wall-clock times")

    plot_p = sub.add_parser("plot", help="render figures from campaign CSVs")
    plot_p.add_argument("--out", default=".", help="directory holding the campaign CSVs")

    return parser


def _run(args) -> int:
    cfg = parse_config(args.config)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.arch is not None:
        cfg = cfg.with_architecture(args.arch)
    if args.baselines is not None:
        names = tuple(b for b in args.baselines.split(",") if b)
        cfg = dataclasses.replace(cfg, baselines=names)
    sweep = _parse_sweep(args.sweep) if args.sweep else None
    paths = run_campaign(cfg, sweep=sweep, out_dir=args.out, timing=args.timing)
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    return 0


def _plot(args) -> int:
    from .plots import render_campaign

    made = render_campaign(args.out)
    if not made:
        print(f"no campaign CSVs found in {args.out!r}", file=sys.stderr)
        return 1
    for path in made:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _plot(args)
    except CfrisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
