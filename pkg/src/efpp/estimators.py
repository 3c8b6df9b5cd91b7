"""Statistics over replicate passage times and geodesics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geodesic import Geodesic, geodesic, passage_times
from .geometry import CylinderRegion, ModelParams, SlabRegion, dist_max, rotation_to
from .poisson import PoissonSample
from .scales import ScaleFunction


@dataclass
class ReplicateRecord:
    """One Monte Carlo observation keyed by ``(n, replicate_index, seed)``.

    ``slab`` maps the slab level (as its shortest round-trip decimal string)
    to the slab deviation, or ``None`` when the geodesic misses the slab.
    """

    n: int
    replicate_index: int
    seed: int
    t_n: float | None
    wandering: float | None
    slab: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def usable(self) -> bool:
        return self.t_n is not None and "failed" not in self.flags and "touched_boundary" not in self.flags

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "replicate_index": self.replicate_index,
            "seed": self.seed,
            "t_n": self.t_n,
            "wandering": self.wandering,
            "slab": dict(self.slab),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ReplicateRecord":
        expected = {"n", "replicate_index", "seed", "t_n", "wandering", "slab", "flags"}
        if set(obj) != expected:
            raise ValueError(f"record fields {sorted(obj)} != {sorted(expected)}")
        return cls(
            n=int(obj["n"]),
            replicate_index=int(obj["replicate_index"]),
            seed=int(obj["seed"]),
            t_n=None if obj["t_n"] is None else float(obj["t_n"]),
            wandering=None if obj["wandering"] is None else float(obj["wandering"]),
            slab={str(k): (None if v is None else float(v)) for k, v in obj["slab"].items()},
            flags=[str(f) for f in obj["flags"]],
        )


def usable(records):
    return [r for r in records if r.usable]


@dataclass
class EmpiricalMeanCurve:
    n: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    var: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        if np.any(np.diff(self.n) <= 0):
            raise ValueError("n grid must be strictly increasing")
        self.mean = np.asarray(self.mean, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        self.var = np.asarray(self.var, dtype=float)
        self.count = np.asarray(self.count, dtype=int)

    @classmethod
    def from_records(cls, records) -> "EmpiricalMeanCurve":
        by_n: dict[int, list[float]] = {}
        for r in usable(records):
            by_n.setdefault(r.n, []).append(r.t_n)
        ns = sorted(by_n)
        means, ses, vars_, counts = [], [], [], []
        for n in ns:
            t = np.asarray(by_n[n])
            if len(t) < 2:
                raise ValueError(f"need at least 2 usable replicates at n={n}")
            v = float(np.var(t, ddof=1))
            means.append(float(np.mean(t)))
            vars_.append(v)
            ses.append(math.sqrt(v / len(t)))
            counts.append(len(t))
        return cls(np.asarray(ns, float), means, ses, vars_, counts)

    @classmethod
    def synthetic(cls, ns, fn) -> "EmpiricalMeanCurve":
        ns = np.asarray(ns, dtype=float)
        z = np.zeros_like(ns)
        return cls(ns, fn(ns), z, z, np.full(ns.size, 0))


def estimate_mean_curve(config, workers: int = 1) -> EmpiricalMeanCurve:
    """Run the replicate grid from an experiment config and reduce it."""
    from .runner import run_records

    return EmpiricalMeanCurve.from_records(run_records(config, workers=workers))


def envelope(psi: ScaleFunction, params: ModelParams, n, level: int = 1) -> np.ndarray:
    """``psi(n) (log^(level) n)^(1/kappa1)``, the nonrandom-gap envelope."""
    n = np.asarray(n, dtype=float)
    logs = n.copy()
    for _ in range(level):
        logs = np.log(logs)
    return psi(n) * logs ** (1.0 / params.kappa1)


@dataclass
class MuEstimate:
    mu_hat: float
    method: str
    c: float
    se: float
    residuals: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _envelope_fit(curve: EmpiricalMeanCurve, psi, params) -> MuEstimate:
    env = envelope(psi, params, curve.n)
    X = np.column_stack([curve.n, env])
    y = curve.mean
    if np.all(curve.se > 0):
        w = 1.0 / curve.se
    else:
        w = np.ones_like(y)
    coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
    resid = y - X @ coef
    se = 0.0
    if np.all(curve.se > 0):
        cov = np.linalg.inv((X * w[:, None] ** 2).T @ X)
        se = float(math.sqrt(cov[0, 0]))
    return MuEstimate(float(coef[0]), "envelope-fit", float(coef[1]), se, resid, {"covariance_source": "weights 1/SE^2" if se else "unweighted"})


def _doubling(curve: EmpiricalMeanCurve, psi, params) -> MuEstimate:
    ns = curve.n
    lookup = {float(n): i for i, n in enumerate(ns)}
    pairs = [(i, lookup[2 * n]) for i, n in enumerate(ns) if 2 * n in lookup]
    if len(pairs) < 2 or len(ns) < 3:
        raise ValueError("doubling estimate needs at least 3 scales forming doubling pairs")
    # sigma(n) >= 2 h(n) - h(2n): the superadditivity defect at each doubling
    defects = np.array([max(0.0, 2 * curve.mean[i] - curve.mean[j]) for i, j in pairs])
    base = np.array([ns[i] for i, _ in pairs])
    env = envelope(psi, params, base)
    c_sigma = float(defects @ env / (env @ env))
    n_max = ns[-1]
    zeta = float(envelope(psi, params, 2 * n_max) / envelope(psi, params, n_max))
    if zeta >= 2:
        raise ValueError("envelope grows too fast for the doubling argument")
    c = c_sigma / (2 - zeta)
    adjust = c * float(envelope(psi, params, n_max))
    mu = (curve.mean[-1] - adjust) / n_max
    resid = curve.mean - mu * ns - c * envelope(psi, params, ns)
    return MuEstimate(
        float(mu), "doubling", float(c), float(curve.se[-1] / n_max), resid,
        {"defects": defects.tolist(), "defect_scales": base.tolist(), "c_sigma": c_sigma, "zeta": zeta},
    )


def estimate_mu(curve: EmpiricalMeanCurve, psi: ScaleFunction, params: ModelParams, method: str = "envelope-fit") -> MuEstimate:
    """Time-constant estimate by envelope least squares or by doubling defects.

    ``envelope-fit`` fits ``h(n) = mu n + c psi(n) (log n)^(1/kappa1)`` (weighted
    by 1/SE when errors are known).  ``doubling`` bounds the mean by the
    doubling defects ``2h(n) - h(2n)``, fits them to the same envelope, and
    subtracts the implied ``c psi(n)(log n)^(1/kappa1)`` at the largest scale.
    """
    if method == "envelope-fit":
        return _envelope_fit(curve, psi, params)
    if method == "doubling":
        return _doubling(curve, psi, params)
    raise ValueError(f"unknown method {method!r}")


def compare_mu(a: MuEstimate, b: MuEstimate) -> dict:
    joint = math.hypot(a.se, b.se)
    diff = abs(a.mu_hat - b.mu_hat)
    return {"difference": diff, "joint_se": joint, "warning": bool(joint > 0 and diff > 2 * joint)}


@dataclass
class TailCurve:
    lam: np.ndarray
    prob: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    replicates: int
    mean: float
    var: float
    confidence: float


def concentration_tail(samples, psi_n: float, lambda_grid, confidence: float = 0.95) -> TailCurve:
    """Empirical ``P(|T - mean| > lam psi(n))`` with Wilson intervals."""
    t = np.asarray(samples, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two samples")
    lam = np.asarray(sorted(lambda_grid), dtype=float)
    dev = np.abs(t - t.mean())
    counts = np.array([int(np.sum(dev > l * psi_n)) for l in lam])
    lo, hi = [], []
    for k in counts:
        ci = stats.binomtest(int(k), t.size).proportion_ci(confidence, method="wilson")
        lo.append(ci.low)
        hi.append(ci.high)
    return TailCurve(lam, counts / t.size, np.asarray(lo), np.asarray(hi), counts, t.size,
                     float(t.mean()), float(np.var(t, ddof=1)), confidence)


def wandering_stats(records, n: int | None = None) -> dict:
    """Quantiles of geodesic wandering; boundary-touching records are excluded and counted."""
    records = list(records)
    if n is None:
        ns = {r.n for r in records}
        if len(ns) > 1:
            raise ValueError("records span several n")
        n = ns.pop() if ns else None
    if any(r.n != n for r in records):
        raise ValueError("records span several n")
    excluded = sum(1 for r in records if "touched_boundary" in r.flags)
    failed = sum(1 for r in records if r.t_n is None or "failed" in r.flags)
    w = np.asarray([r.wandering for r in usable(records) if r.wandering is not None], dtype=float)
    q = {f"q{int(p)}": (float(np.percentile(w, p)) if w.size else None) for p in (50, 90, 99)}
    return {"n": n, "count": int(w.size), "excluded_boundary": excluded, "failed": failed,
            "median": q["q50"], "q90": q["q90"], "q99": q["q99"]}


def loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def path_slab_deviation(path, lam: float, half_width: float, start, end) -> float | None:
    """``dist_max`` of the geodesic points in ``{|x1 - lam| <= half_width}`` to ``[start, end]``."""
    path = np.atleast_2d(np.asarray(path, dtype=float))
    inside = path[SlabRegion(lam, half_width).contains(path)]
    return dist_max(inside, start, end)


def slab_deviation(sample: PoissonSample, x, y, lam: float, psi: ScaleFunction, n: float, alpha: float) -> float | None:
    """Slab deviation of ``M(x, y)`` at level ``lam`` measured against the axis segment ``[0, n e1]``."""
    g = geodesic(sample, x, y, alpha)
    return path_slab_deviation(g.path, lam, float(psi(n)), np.zeros(sample.d), _axis_point(sample.d, n))


def _axis_point(d: int, n: float) -> np.ndarray:
    e = np.zeros(d)
    e[0] = n
    return e


def slab_key(lam: float) -> str:
    return repr(float(lam))


def record_from_geodesic(g: Geodesic, n: int, replicate_index: int, seed: int, levels, psi_n: float,
                         empty_ball: float | None = None, psi_alpha: float | None = None,
                         direction=None) -> ReplicateRecord:
    """Summarise a geodesic from ``0`` to ``n u``; slabs are taken across ``u`` (default ``e1``)."""
    d = g.path.shape[1]
    start, end = np.zeros(d), _axis_point(d, n)
    path = g.path if direction is None else rotation_to(direction).inverse(g.path)
    flags = []
    if g.touches_boundary:
        flags.append("touched_boundary")
    if empty_ball is not None and psi_alpha is not None and empty_ball > psi_alpha:
        flags.append("F_n_violated")
    slab = {}
    for lam in levels:
        dev = path_slab_deviation(path, lam, psi_n, start, end)
        slab[slab_key(lam)] = dev
        if dev is None and "slab_missed" not in flags:
            flags.append("slab_missed")
    return ReplicateRecord(n, replicate_index, seed, g.total, dist_max(path, start, end), slab, flags)


def box_pair_sup_probe(sample: PoissonSample, n: float, k: int, psi: ScaleFunction, params: ModelParams,
                       grid_resolution: int = 2, grids: tuple | None = None) -> float:
    """``max |T(x,y) - T(x',y')| / psi(n)`` over probe grids of the two level-(k-1) cylinders.

    The maximum over pairs of pairs equals ``max T - min T`` over the product
    grid.  ``grids`` overrides the probe points with explicit ``(X, Y)`` arrays.
    """
    d = sample.d
    if grids is None:
        L = float(psi(n))
        r = psi.cylinder_radius(n, k - 1)
        c1 = CylinderRegion(L, r)
        c2 = CylinderRegion(L, r, translation=_axis_point(d, n))
        X = c1.probe_points(d, grid_resolution)
        Y = c2.probe_points(d, grid_resolution)
    else:
        X, Y = (np.atleast_2d(np.asarray(g, dtype=float)) for g in grids)
    if not (np.all(sample.box.contains(X)) and np.all(sample.box.contains(Y))):
        raise ValueError("probe cylinders do not fit inside the sample box")
    times = np.vstack([passage_times(sample, x, Y, params.alpha) for x in X])
    return float((times.max() - times.min()) / psi(n))


def empirical_subadditivity(curve: EmpiricalMeanCurve, z: float = 3.0) -> list[tuple]:
    """Grid pairs ``(a, b)`` with ``a + b`` on the grid violating ``h(a+b) <= h(a) + h(b) + z SE``."""
    idx = {float(n): i for i, n in enumerate(curve.n)}
    bad = []
    for i, a in enumerate(curve.n):
        for j, b in enumerate(curve.n):
            if j < i or a + b not in idx:
                continue
            s = idx[a + b]
            se = math.sqrt(curve.se[i] ** 2 + curve.se[j] ** 2 + curve.se[s] ** 2)
            if curve.mean[s] > curve.mean[i] + curve.mean[j] + z * se:
                bad.append((float(a), float(b)))
    return bad
