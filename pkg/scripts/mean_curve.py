"""Mean passage-time curve, time-constant estimates and variance growth.

    python scripts/mean_curve.py --n 16,32,64,128,256 --replicates 400 --out runs/mean
"""

import argparse
import json
import os

import numpy as np

from efpp.config import ExperimentConfig
from efpp.estimators import EmpiricalMeanCurve, compare_mu, estimate_mu, loglog_slope
from efpp.runner import load_or_run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="16,32,64,128,256")
    ap.add_argument("--replicates", type=int, default=400)
    ap.add_argument("--seed", type=int, default=606)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--out", default="runs/mean-curve")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(n_grid=tuple(int(v) for v in args.n.split(",")), replicates=args.replicates,
                           master_seed=args.seed, alpha=args.alpha, lambda_count=0)
    curve = EmpiricalMeanCurve.from_records(load_or_run(cfg, args.out, args.workers))
    fits = {m: estimate_mu(curve, cfg.psi, cfg.params, m) for m in ("envelope-fit", "doubling")}
    mu = fits["envelope-fit"].mu_hat
    print(f"{'n':>6} {'mean':>10} {'se':>8} {'var':>10} {'z(mean-mu n)':>13}")
    for n, m, se, v in zip(curve.n, curve.mean, curve.se, curve.var):
        print(f"{int(n):6d} {m:10.3f} {se:8.3f} {v:10.3f} {(m - mu * n) / se:13.2f}")
    for name, est in fits.items():
        print(f"{name}: mu_hat={est.mu_hat:.4f} se={est.se:.4f}")
    print("method comparison:", json.dumps(compare_mu(fits["envelope-fit"], fits["doubling"])))
    print(f"log-log slope of Var(T_n): {loglog_slope(curve.n, curve.var):.3f}")


if __name__ == "__main__":
    main()
