"""Oracle and lemma checks shared by the ``verify`` subcommand and the acceptance tests.

Every suite takes an explicit seed and returns pass/total counts, so a
failure is reproducible from its printed line alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geodesic import geodesic, passage_times, perturbation_gap
from .geometry import BoxRegion, rotation_containment_factor, rotation_to, theta
from .oracle import brute_force_geodesic, complete_graph_dijkstra, exhaustive_min_time, linear_nearest
from .poisson import PoissonSample, SeedPolicy, ball_query, sample_poisson

REL_TOL = 1e-12


@dataclass
class SuiteResult:
    name: str
    passed: int
    total: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total and self.total > 0

    def line(self) -> str:
        return f"{self.name}: {self.passed}/{self.total} {'PASS' if self.ok else 'FAIL'}"


def random_instance(rng: np.random.Generator, d: int, n_max: int, n_min: int = 2) -> tuple[PoissonSample, np.ndarray, np.ndarray]:
    """A small uniform sample with random density and two endpoints in its box."""
    n = int(rng.integers(n_min, n_max + 1))
    side = n ** (1 / d) * rng.uniform(0.5, 2.5)
    box = BoxRegion(np.zeros(d), np.full(d, side / 2))
    pts = box.lo + rng.random((n, d)) * side
    sample = PoissonSample(pts, box, 1.0)
    x, y = box.lo + rng.random((2, d)) * side
    return sample, x, y


def _close(a: float, b: float, rel: float = REL_TOL) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def geodesic_exactness(count: int, dims=(2, 3), alphas=(1.5, 2.0, 3.0), n_max: int = 60, seed: int = 1) -> SuiteResult:
    """Pruned grid solver against dense complete-graph Dijkstra."""
    res = SuiteResult("geodesic-vs-dense-dijkstra", 0, 0)
    for d in dims:
        for alpha in alphas:
            rng = SeedPolicy(seed, int(alpha * 10), stream=d).generator()
            for i in range(count):
                sample, x, y = random_instance(rng, d, n_max)
                fast = geodesic(sample, x, y, alpha).total
                slow = brute_force_geodesic(sample, x, y, alpha).total
                res.total += 1
                if _close(fast, slow):
                    res.passed += 1
                else:
                    res.failures.append((d, alpha, i, fast, slow))
    return res


def dijkstra_vs_enumeration(count: int, n_max: int = 9, seed: int = 2) -> SuiteResult:
    """Dense Dijkstra against enumeration of every simple path."""
    res = SuiteResult("dense-dijkstra-vs-enumeration", 0, 0)
    rng = SeedPolicy(seed).generator()
    for i in range(count):
        d = int(rng.choice([2, 3]))
        alpha = float(rng.choice([1.5, 2.0, 3.0]))
        sample, _, _ = random_instance(rng, d, n_max)
        pts = sample.points
        src, dst = rng.choice(len(pts), size=2, replace=len(pts) < 2)
        dist, _ = complete_graph_dijkstra(pts, int(src), alpha)
        best, _ = exhaustive_min_time(pts, int(src), int(dst), alpha)
        res.total += 1
        if _close(dist[dst], best):
            res.passed += 1
        else:
            res.failures.append((i, float(dist[dst]), best))
    return res


def metric_checks(target_triples: int, anchors: int = 22, seed: int = 3, alpha: float = 1.5) -> tuple[SuiteResult, SuiteResult]:
    """Triangle inequality and symmetry on a matrix of exact passage times.

    Row ``i`` of the matrix comes from one Dijkstra run out of anchor ``i``,
    so ``T[i, j]`` and ``T[j, i]`` are computed independently.
    """
    tri = SuiteResult("triangle-inequality", 0, 0)
    sym = SuiteResult("symmetry", 0, 0)
    rep = 0
    while tri.total < target_triples or sym.total < target_triples:
        policy = SeedPolicy(seed, rep)
        rep += 1
        box = BoxRegion(np.zeros(2), np.array([25.0, 15.0]))
        sample = sample_poisson(box, 1.0, policy)
        rng = policy.generator()
        a = box.lo + rng.random((anchors, 2)) * 2 * box.half_widths
        T = np.vstack([passage_times(sample, p, a, alpha) for p in a])
        for i in range(anchors):
            for j in range(anchors):
                if i < j and sym.total < target_triples:
                    sym.total += 1
                    if _close(T[i, j], T[j, i], 1e-9) or max(T[i, j], T[j, i]) == 0:
                        sym.passed += 1
                    else:
                        sym.failures.append((rep, i, j, T[i, j], T[j, i]))
                for k in range(anchors):
                    if tri.total >= target_triples or len({i, j, k}) < 3:
                        continue
                    tri.total += 1
                    if T[i, k] <= (T[i, j] + T[j, k]) * (1 + REL_TOL):
                        tri.passed += 1
                    else:
                        tri.failures.append((rep, i, j, k))
    return tri, sym


def _box_boundary_points(rng, a: float, b: float, d: int, count: int) -> np.ndarray:
    """Points on the surface of ``{|x1| <= a, |x2| <= b}``, rim corners included."""
    out = np.empty((count, d))
    for m in range(count):
        u = rng.normal(size=d - 1)
        u /= np.linalg.norm(u)
        face = rng.integers(3)
        if face == 0 or m < 4:
            # rim: both constraints active
            out[m] = np.concatenate([[a * rng.choice([-1, 1])], b * u])
        elif face == 1:
            out[m] = np.concatenate([[a * rng.choice([-1, 1])], b * u * rng.random() ** (1 / (d - 1))])
        else:
            out[m] = np.concatenate([[rng.uniform(-a, a)], b * u])
    return out


def containment_lemma(count: int, per_case: int = 100, seed: int = 4, slack: float = 1e-9) -> SuiteResult:
    """``s B_{a,b}`` lies in the rotated box ``T_z B_{a,b}`` for the factor ``s``."""
    res = SuiteResult("rotation-containment", 0, 0)
    rng = SeedPolicy(seed).generator()
    for i in range(count):
        d = int(rng.integers(2, 5))
        a = float(rng.uniform(0.1, 10))
        b = a * float(rng.uniform(1, 10))
        z = rng.normal(size=d)
        rot = rotation_to(z)
        s = rotation_containment_factor(a, b, theta(z))
        p = s * _box_boundary_points(rng, a, b, d, per_case)
        back = rot.inverse(p)
        ok = (np.abs(back[:, 0]) <= a + slack) & (np.linalg.norm(back[:, 1:], axis=1) <= b + slack)
        res.total += 1
        if ok.all():
            res.passed += 1
        else:
            res.failures.append((i, d, a, b))
    return res


def rotation_orthogonality(count: int, seed: int = 5) -> SuiteResult:
    res = SuiteResult("rotation-orthogonality", 0, 0)
    rng = SeedPolicy(seed).generator()
    for _ in range(count):
        d = int(rng.integers(2, 5))
        t = rng.normal(size=d)
        t /= np.linalg.norm(t)
        m = rotation_to(t).matrix
        e1 = np.zeros(d)
        e1[0] = 1
        res.total += 1
        if np.abs(m.T @ m - np.eye(d)).max() < 1e-12 and np.linalg.norm(m @ e1 - t) < 1e-12:
            res.passed += 1
    return res


def poisson_counts(replicates: int, seed: int = 6, level: float = 0.001) -> SuiteResult:
    """Chi-square goodness of fit of per-sample counts to ``Poisson(lambda vol)``."""
    box = BoxRegion(np.zeros(2), np.array([5.0, 4.0]))
    mean = box.volume * 2.0
    counts = np.array([len(sample_poisson(box, 2.0, SeedPolicy(seed, i))) for i in range(replicates)])
    # bins with expected count >= 5 on each side of the mean
    edges = np.unique(np.round(stats.poisson.ppf(np.linspace(0, 1, 21)[1:-1], mean)))
    cuts = np.concatenate([[-np.inf], edges + 0.5, [np.inf]])
    observed = np.histogram(counts, bins=cuts)[0]
    expected = np.diff(stats.poisson.cdf(cuts, mean)) * replicates
    p = stats.chisquare(observed, expected).pvalue
    return SuiteResult(f"poisson-count-chi2 p={p:.3g}", int(p > level), 1)


def poisson_coordinates(seed: int = 7, level: float = 0.001) -> SuiteResult:
    """KS test of each coordinate against the uniform law on its box side."""
    box = BoxRegion(np.array([1.0, -2.0, 0.5]), np.array([6.0, 3.0, 2.0]))
    s = sample_poisson(box, 20.0, SeedPolicy(seed))
    ps = [stats.kstest(s.points[:, j], "uniform", args=(box.lo[j], 2 * box.half_widths[j])).pvalue for j in range(3)]
    return SuiteResult(f"poisson-coordinate-ks min_p={min(ps):.3g}", sum(p > level for p in ps), 3)


def index_queries(count: int, seed: int = 8) -> SuiteResult:
    """``ball_query`` and ``q(x)`` from the grid index against linear scans."""
    res = SuiteResult("index-vs-linear-scan", 0, 0)
    rng = SeedPolicy(seed).generator()
    for i in range(count):
        d = int(rng.integers(2, 4))
        box = BoxRegion(np.zeros(d), rng.uniform(1, 6, size=d))
        s = sample_poisson(box, float(rng.uniform(0.2, 5)), SeedPolicy(seed, i + 1))
        if len(s) == 0:
            continue
        c = box.lo + rng.random(d) * 2 * box.half_widths * 1.2 - 0.1 * box.half_widths
        r = float(rng.uniform(0, 3))
        lin = np.flatnonzero(np.linalg.norm(s.points - c, axis=1) <= r)
        res.total += 1
        if np.array_equal(ball_query(s, c, r), lin) and s.nearest_index(c) == linear_nearest(s.points, c):
            res.passed += 1
    return res


def perturbation_bound(count: int, n: int = 64, seed: int = 9, alpha: float = 1.5, per_sample: int = 50) -> SuiteResult:
    """``|T(x,y) - T(x,y')| <= (2|q(y)-y| + 2|y-y'|)^alpha`` on random triples."""
    from .config import ExperimentConfig

    res = SuiteResult("perturbation-bound", 0, 0)
    cfg = ExperimentConfig(alpha=alpha, n_grid=(n,))
    box = cfg.box(n)
    inner = BoxRegion(box.center, box.half_widths * 0.9)
    rep = 0
    while res.total < count:
        policy = SeedPolicy(seed, rep, stream=n)
        rep += 1
        sample = sample_poisson(box, 1.0, policy)
        rng = policy.generator()
        for _ in range(min(per_sample, count - res.total)):
            x, y = inner.lo + rng.random((2, 2)) * 2 * inner.half_widths
            step = rng.normal(size=2)
            y2 = y + step / np.linalg.norm(step) * rng.exponential(2.0)
            y2 = np.clip(y2, box.lo, box.hi)
            gap, bound = perturbation_gap(sample, x, y, y2, alpha)
            res.total += 1
            if gap <= bound * (1 + 1e-9) + 1e-12:
                res.passed += 1
            else:
                res.failures.append((rep, gap, bound))
    return res


def run_battery(quick: bool = True) -> list[SuiteResult]:
    scale = 1 if quick else 10
    out = [
        geodesic_exactness(10 * scale),
        dijkstra_vs_enumeration(20 * scale),
        *metric_checks(1000 * scale),
        containment_lemma(100 * scale),
        rotation_orthogonality(100 * scale),
        poisson_counts(300 * scale),
        poisson_coordinates(),
        index_queries(50 * scale),
        perturbation_bound(50 * scale),
    ]
    return out
