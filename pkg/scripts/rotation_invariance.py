"""Two-sample KS comparison of T(0, n u) for the axis and a rotated direction."""

import argparse
import os

import numpy as np
from scipy import stats

from efpp.config import ExperimentConfig
from efpp.runner import load_or_run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--replicates", type=int, default=2000)
    ap.add_argument("--direction", default="1,1", help="comma-separated direction, compared with e1")
    ap.add_argument("--seed", type=int, default=505)
    ap.add_argument("--out", default="runs/rotation")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args(argv)

    base = ExperimentConfig(n_grid=(args.n,), replicates=args.replicates, master_seed=args.seed, lambda_count=0)
    other = base.replace(master_seed=args.seed + 1, direction=tuple(float(v) for v in args.direction.split(",")))
    samples = []
    for name, cfg in (("axis", base), ("rotated", other)):
        recs = load_or_run(cfg, os.path.join(args.out, name), args.workers)
        t = np.array([r.t_n for r in recs if r.t_n is not None])
        samples.append(t)
        print(f"{name:8s} u={np.round(cfg.unit, 4).tolist()} mean={t.mean():.3f} sd={t.std(ddof=1):.3f} N={t.size}")
    res = stats.ks_2samp(*samples)
    print(f"KS statistic={res.statistic:.4f} p={res.pvalue:.4f}")


if __name__ == "__main__":
    main()
