"""Run the full gradient-vs-FD pipeline for a config and print the comparison table.

    python scripts/run_case.py [--config scripts/desk.yaml] [--out DIR] [--workers N]
"""
import argparse
import logging
import time

from nsshape.config import load_config
from nsshape.pipeline import Pipeline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    ap.add_argument("--preset", default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    over = {}
    if args.out:
        over["output"] = {"directory": args.out}
    if args.workers:
        over["fd"] = {"workers": args.workers}
    pipe = Pipeline(load_config(args.config, args.preset, over))
    t0 = time.time()
    reports = pipe.run_all()
    print(f"\nconfig {pipe.hash}, {pipe.mesh.n_elements} elements, {pipe.mesh.wall_edges.size} wall edges, "
          f"{time.time() - t0:.0f}s")
    print(f"{'objective':>9} {'p':>2} {'rel L2 pointwise':>17} {'rel L2 variational':>19}")
    for (kind, p), rep in sorted(reports.items()):
        print(f"{kind:>9} {p:>2} {rep.metrics('pointwise')['rel_l2']:17.3f} "
              f"{rep.metrics('variational')['rel_l2']:19.3f}")


if __name__ == "__main__":
    main()
