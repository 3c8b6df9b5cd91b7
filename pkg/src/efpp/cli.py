"""Command line entry point: ``efpp <subcommand> [flags]``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .estimators import (
    EmpiricalMeanCurve, box_pair_sup_probe, compare_mu, concentration_tail, envelope,
    estimate_mu, loglog_slope, usable, wandering_stats,
)
from .geodesic import OutsideBoxError, geodesic
from .poisson import CapacityError, EmptySampleError
from .records import ProvenanceError, load_runs, summary_rows, SUMMARY_HEADER
from .runner import load_or_run, replicate_sample

QUICK = {"n_grid": (16, 32, 64), "replicates": 20}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--n", type=_int_list, help="n or comma-separated n grid")
    common.add_argument("--replicates", type=int)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--alpha", type=float)
    common.add_argument("--d", type=int)
    common.add_argument("--out", type=Path, help="output directory (default $EFPP_OUT or config)")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--quick", action="store_true", help="small grid and few replicates")

    p = _Parser(prog="efpp", description="Euclidean first-passage percolation experiments")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("gen", parents=[common], help="dump one Poisson sample")
    g = sub.add_parser("geodesic", parents=[common], help="one geodesic between two endpoints")
    g.add_argument("--from", dest="src", type=_vector, help="start point, comma-separated")
    g.add_argument("--to", dest="dst", type=_vector, help="end point, comma-separated")
    g.add_argument("--replicate", type=int, default=0)
    sub.add_parser("mu", parents=[common], help="estimate the time constant")
    c = sub.add_parser("concentration", parents=[common], help="tail curves of (T_n - mean)/psi(n)")
    c.add_argument("--lambda-max", type=float, default=4.0)
    sub.add_parser("wander", parents=[common], help="wandering and slab deviation statistics")
    sub.add_parser("gap", parents=[common], help="nonrandom gap against its envelopes")
    pr = sub.add_parser("probe", parents=[common], help="box-pair sup probe")
    pr.add_argument("--resolution", type=int, help="interior probe grid per axis")
    sub.add_parser("verify", parents=[common], help="oracle and lemma battery")
    r = sub.add_parser("report", parents=[common], help="summarise stored runs")
    r.add_argument("dirs", nargs="*", type=Path, help="output directories (default --out)")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.quick:
        changes.update(QUICK)
    if args.n is not None:
        changes["n_grid"] = args.n
    if args.replicates is not None:
        changes["replicates"] = args.replicates
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.d is not None:
        changes["d"] = args.d
        if cfg.direction is not None and len(cfg.direction) != args.d:
            changes["direction"] = None
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    elif not args.config and os.environ.get("EFPP_OUT"):
        changes["output_dir"] = os.environ["EFPP_OUT"]
    try:
        return cfg.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _records(cfg, args):
    return load_or_run(cfg, cfg.output_dir, args.workers)


def cmd_gen(cfg, args) -> int:
    n = cfg.n_grid[0]
    sample = replicate_sample(cfg, n, 0)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sample.dump(out / "points.txt")
    print(f"n={n} points={len(sample)} seed={sample.seed} -> {out / 'points.txt'}")
    return 0


def cmd_geodesic(cfg, args) -> int:
    n = cfg.n_grid[0]
    src = np.zeros(cfg.d) if args.src is None else args.src
    dst = cfg.endpoint(n) if args.dst is None else args.dst
    if src.shape != (cfg.d,) or dst.shape != (cfg.d,):
        raise ConfigError(f"endpoints must have {cfg.d} coordinates")
    sample = replicate_sample(cfg, n, args.replicate)
    g = geodesic(sample, src, dst, cfg.alpha)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    g.dump(out / "geodesic.txt", cfg.alpha)
    print(f"T={g.total!r} hops={len(g.path) - 1} max_edge={g.max_edge:.6g} touches_boundary={g.touches_boundary}")
    return 0


def _curve(cfg, args):
    recs = _records(cfg, args)
    curve = EmpiricalMeanCurve.from_records(recs)
    return recs, curve


def _mu_summary(cfg, curve) -> dict:
    fit = estimate_mu(curve, cfg.psi, cfg.params, "envelope-fit")
    try:
        dbl = estimate_mu(curve, cfg.psi, cfg.params, "doubling")
    except ValueError as exc:
        # too few doubling pairs on this grid
        return {"envelope-fit": fit, "doubling": None, "comparison": {"skipped": str(exc)}}
    return {"envelope-fit": fit, "doubling": dbl, "comparison": compare_mu(fit, dbl)}


def _mu_dict(m) -> dict:
    return {"mu_hat": m.mu_hat, "c": m.c, "se": m.se, "method": m.method, "diagnostics": m.diagnostics}


def cmd_mu(cfg, args) -> int:
    _, curve = _curve(cfg, args)
    res = _mu_summary(cfg, curve)
    out = {"config_hash": cfg.hash, "comparison": res["comparison"]}
    for key in ("envelope-fit", "doubling"):
        if res[key] is None:
            print(f"{key}: skipped ({res['comparison']['skipped']})")
            continue
        out[key] = _mu_dict(res[key])
        print(f"{key}: mu_hat={res[key].mu_hat:.6f} se={res[key].se:.3g}")
    if res["comparison"].get("warning"):
        print("warning: the two estimates differ by more than 2 joint standard errors")
    _write_json(Path(cfg.output_dir) / "mu.json", out)
    return 0


def cmd_concentration(cfg, args) -> int:
    recs = _records(cfg, args)
    lam = np.linspace(0, args.lambda_max, int(args.lambda_max * 4) + 1)
    out = {"config_hash": cfg.hash, "lambda": lam, "curves": {}}
    for n in cfg.n_grid:
        t = np.array([r.t_n for r in usable(recs) if r.n == n])
        if t.size < 2:
            continue
        tc = concentration_tail(t, float(cfg.psi(n)), lam)
        out["curves"][str(n)] = {"prob": tc.prob, "lower": tc.lower, "upper": tc.upper, "count": int(t.size)}
        print(f"n={n}: " + " ".join(f"P(>{l:g})={p:.3f}" for l, p in zip(lam[::4], tc.prob[::4])))
    _write_json(Path(cfg.output_dir) / "concentration.json", out)
    return 0


def cmd_wander(cfg, args) -> int:
    recs = _records(cfg, args)
    rows = [wandering_stats([r for r in recs if r.n == n], n) for n in cfg.n_grid]
    for row in rows:
        print(f"n={row['n']}: count={row['count']} median={row['median']} q90={row['q90']} "
              f"excluded_boundary={row['excluded_boundary']} failed={row['failed']}")
    slab_pairs = [(v, r.wandering) for r in usable(recs) for v in r.slab.values() if v is not None]
    above = sum(v > w for v, w in slab_pairs)
    print(f"slab deviations defined: {len(slab_pairs)}, exceeding wandering: {above}")
    out = {"config_hash": cfg.hash, "stats": rows, "slab_defined": len(slab_pairs), "slab_above_wandering": above}
    med = [(r["n"], r["median"]) for r in rows if r["median"]]
    if len(med) >= 2:
        out["median_slope"] = loglog_slope(*zip(*med))
        print(f"log-log slope of median wandering: {out['median_slope']:.3f}")
    _write_json(Path(cfg.output_dir) / "wander.json", out)
    return 0


def cmd_gap(cfg, args) -> int:
    _, curve = _curve(cfg, args)
    fit = estimate_mu(curve, cfg.psi, cfg.params, "envelope-fit")
    gap = curve.mean - fit.mu_hat * curve.n
    env1 = envelope(cfg.psi, cfg.params, curve.n, 1)
    env2 = envelope(cfg.psi, cfg.params, curve.n, 2)
    out = Path(cfg.output_dir)
    lines = ["n,gap,se,envelope_log,envelope_loglog"]
    for row in zip(curve.n, gap, curve.se, env1, env2):
        lines.append(",".join(repr(float(v)) for v in row))
        print("n={:g} gap={:.4g} se={:.3g} gap/env_log={:.4g} gap/env_loglog={:.4g}".format(
            row[0], row[1], row[2], row[1] / row[3], row[1] / row[4]))
    out.mkdir(parents=True, exist_ok=True)
    (out / "gap.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "gap.json", {"config_hash": cfg.hash, "mu": _mu_dict(fit)})
    return 0


def cmd_probe(cfg, args) -> int:
    res = cfg.grid_resolution if args.resolution is None else args.resolution
    out = {"config_hash": cfg.hash, "k": cfg.k, "resolution": res, "by_n": {}}
    for n in cfg.n_grid:
        vals = []
        for i in range(cfg.replicates):
            sample = replicate_sample(cfg, n, i)
            vals.append(box_pair_sup_probe(sample, n, cfg.k, cfg.psi, cfg.params, res))
        v = np.asarray(vals)
        out["by_n"][str(n)] = {"values": v, "median": float(np.median(v)), "q90": float(np.percentile(v, 90))}
        print(f"n={n}: probe/psi median={np.median(v):.4g} q90={np.percentile(v, 90):.4g} max={v.max():.4g}")
    _write_json(Path(cfg.output_dir) / "probe.json", out)
    return 0


def cmd_verify(cfg, args) -> int:
    from .verify import run_battery

    results = run_battery(quick=args.quick)
    for r in results:
        print(r.line())
    return 0 if all(r.ok for r in results) else 2


def cmd_report(cfg, args) -> int:
    dirs = args.dirs or [Path(cfg.output_dir)]
    digest, recs = load_runs(dirs)
    print(f"config_hash={digest} records={len(recs)}")
    print(",".join(SUMMARY_HEADER))
    for row in summary_rows(recs):
        print(",".join(row))
    return 0


COMMANDS = {
    "gen": cmd_gen, "geodesic": cmd_geodesic, "mu": cmd_mu, "concentration": cmd_concentration,
    "wander": cmd_wander, "gap": cmd_gap, "probe": cmd_probe, "verify": cmd_verify, "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ProvenanceError, OutsideBoxError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError, CapacityError, EmptySampleError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
