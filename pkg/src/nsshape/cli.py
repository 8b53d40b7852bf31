"""Command line entry point: ``nsshape <stage> [--config F] [--preset desk|paper] [--workers N] [--out DIR]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config

STAGES = ("mesh", "solve", "adjoint", "gradient", "fd", "compare", "mms", "all")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsshape", description="Shape gradients of lift and drag for "
                                 "viscous compressible flow, verified against finite differences.")
    ap.add_argument("stage", choices=STAGES)
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--preset", choices=("desk", "paper"), help="base configuration (default: desk)")
    ap.add_argument("--workers", type=int, help="parallel FD solves")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose + 1, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s: %(message)s")
    from .pipeline import Pipeline, StageError

    overrides = {}
    if args.workers is not None:
        overrides.setdefault("fd", {})["workers"] = args.workers
    if args.out is not None:
        overrides["output"] = {"directory": args.out}
    try:
        cfg = load_config(args.config, args.preset, overrides)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    pipe = Pipeline(cfg)
    print(f"config hash {pipe.hash}, output in {pipe.out}")
    try:
        if args.stage == "all":
            pipe.run_all()
        else:
            getattr(pipe, f"stage_{args.stage}")()
    except StageError as exc:
        print(f"{args.stage} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
