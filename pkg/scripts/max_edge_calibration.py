"""Calibrate the long-edge constant c from exact geodesics at small n.

Geodesics come from the dense complete-graph Dijkstra oracle, so the
calibration does not depend on the pruned solver. For each replicate the
longest edge is divided by psi(n)^(1/alpha); the script prints quantiles of
that ratio and the fraction of replicates above each candidate c.
"""

import argparse

import numpy as np

from efpp.config import ExperimentConfig
from efpp.oracle import brute_force_geodesic
from efpp.runner import replicate_sample


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--seed", type=int, default=36)
    ap.add_argument("--candidates", default="1,2,3,4,6")
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(n_grid=(args.n,), alpha=args.alpha, master_seed=args.seed)
    unit = cfg.psi(args.n) ** (1 / cfg.alpha)
    ratios = []
    for i in range(args.replicates):
        sample = replicate_sample(cfg, args.n, i)
        path = brute_force_geodesic(sample, np.zeros(cfg.d), cfg.endpoint(args.n), cfg.alpha).path
        ratios.append(np.linalg.norm(np.diff(path, axis=0), axis=1).max() / unit)
    ratios = np.array(ratios)
    print(f"n={args.n} alpha={cfg.alpha} psi^(1/alpha)={unit:.3f} replicates={ratios.size}")
    for q in (0.5, 0.9, 0.99, 1.0):
        print(f"  quantile {q:.2f}: {np.quantile(ratios, q):.3f}")
    for c in (float(v) for v in args.candidates.split(",")):
        print(f"  c={c:g}: fraction above {np.mean(ratios > c):.3f}")


if __name__ == "__main__":
    main()
