"""Median geodesic wandering against n, with its log-log slope.

Slab deviations are checked against the wandering of the same geodesic.
"""

import argparse
import os

import numpy as np

from efpp.config import ExperimentConfig
from efpp.estimators import loglog_slope, usable, wandering_stats
from efpp.runner import load_or_run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="32,64,128,256,512")
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--seed", type=int, default=808)
    ap.add_argument("--out", default="runs/wandering")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(n_grid=tuple(int(v) for v in args.n.split(",")), replicates=args.replicates,
                           master_seed=args.seed)
    recs = load_or_run(cfg, args.out, args.workers)
    medians = []
    print(f"{'n':>5} {'median':>8} {'q90':>8} {'q99':>8} {'n^0.75':>8} {'excluded':>8}")
    for n in cfg.n_grid:
        s = wandering_stats([r for r in recs if r.n == n], n)
        medians.append(s["median"])
        print(f"{n:5d} {s['median']:8.3f} {s['q90']:8.3f} {s['q99']:8.3f} {n**0.75:8.3f} "
              f"{s['excluded_boundary'] + s['failed']:8d}")
    print(f"log-log slope of median wandering: {loglog_slope(cfg.n_grid, medians):.3f}")
    pairs = [(v, r.wandering) for r in usable(recs) for v in r.slab.values() if v is not None]
    print(f"slab deviations above wandering: {sum(v > w for v, w in pairs)} of {len(pairs)}")
    print(f"largest slab/wandering ratio: {max((v / w for v, w in pairs if w > 0), default=np.nan):.3f}")


if __name__ == "__main__":
    main()
