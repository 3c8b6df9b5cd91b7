"""Exact passage times and geodesics for the powered-Euclidean cost.

The solver is Dijkstra on the complete graph over the sample, with
neighbours generated lazily from the grid index.  Two prunes keep it exact:

* an edge ``(u, v)`` of length ``l`` is never needed when some third point
  lies in ``{c : |u-c|^a + |c-v|^a <= l^a}``; the per-cell covering bounds
  certify this for every edge longer than a per-cell radius, and for
  shorter edges whose midpoint cell is dense enough;
* an edge whose cost exceeds the remaining budget (best known total minus
  the settled distance) cannot lie on an optimal path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .geometry import lens_inradius_ratio
from .poisson import PoissonSample, write_points

SHELL_FRACTION = 0.05


class OutsideBoxError(ValueError):
    """Endpoint lies outside the sample box."""


def path_time(path, alpha: float) -> float:
    """``sum_i |q_i - q_{i+1}|**alpha``; zero for a single point."""
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] == 0 or path.size == 0:
        raise ValueError("path must contain at least one point")
    if path.shape[0] == 1:
        return 0.0
    steps = np.linalg.norm(np.diff(path, axis=0), axis=1)
    return float(np.sum(steps**alpha))


@dataclass(frozen=True)
class PathCost:
    path: np.ndarray
    total: float
    max_edge: float

    @classmethod
    def of(cls, path, alpha: float) -> "PathCost":
        path = np.atleast_2d(np.asarray(path, dtype=float))
        edges = np.linalg.norm(np.diff(path, axis=0), axis=1) if len(path) > 1 else np.zeros(0)
        return cls(path, path_time(path, alpha), float(edges.max()) if edges.size else 0.0)


@dataclass(frozen=True)
class Geodesic(PathCost):
    x: np.ndarray
    y: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    indices: np.ndarray
    touches_boundary: bool = False
    settled: int = 0

    def dump(self, path, alpha: float) -> None:
        write_points(path, self.path, f"# efpp-geodesic total={self.total!r} alpha={alpha!r}")


@lru_cache(maxsize=16)
def _ratio(alpha: float) -> float:
    # strictly inside the analytic inradius so rounding never over-certifies
    return lens_inradius_ratio(alpha) * (1 - 1e-9)


def _certificate(sample: PoissonSample, alpha: float):
    cache = sample.__dict__.setdefault("_radius_cache", {})
    if alpha not in cache:
        bound, _ = sample.cover
        idx = sample.index
        cache[alpha] = _kernels.certified_radii(bound, idx.origin, idx.cell_size, idx.shape, _ratio(alpha))
    return cache[alpha]


def _check_inside(sample: PoissonSample, *points):
    for p in points:
        if not sample.box.contains(np.asarray(p, dtype=float), slack=1e-9)[0]:
            raise OutsideBoxError(f"endpoint {p} lies outside the sample box")


def chain_upper_bound(sample: PoissonSample, a: int, b: int, alpha: float) -> float:
    """Cost of the greedy chain of nearest points along the segment between sorted positions ``a`` and ``b``."""
    idx = sample.index
    pa, pb = idx.points[a], idx.points[b]
    steps = max(1, int(math.ceil(np.linalg.norm(pb - pa) / idx.cell_size)))
    t = np.linspace(0.0, 1.0, steps + 1)[:, None]
    probes = pa + t * (pb - pa)
    chain, _ = _kernels.nearest_batch(*idx.args, probes)
    chain = np.concatenate([[a], chain, [b]])
    keep = np.concatenate([[True], chain[1:] != chain[:-1]])
    return path_time(idx.points[chain[keep]], alpha)


def _solve(sample: PoissonSample, src: int, targets: np.ndarray, alpha: float, budget: float, prune: bool):
    idx = sample.index
    radii = _certificate(sample, alpha)
    bound, _ = sample.cover
    return _kernels.lazy_dijkstra(
        idx.points, idx.cell_start, idx.origin, idx.cell_size, idx.shape,
        radii, bound, float(alpha), _ratio(alpha), int(src), targets.astype(np.int64),
        float(budget), bool(prune),
    )


def geodesic(sample: PoissonSample, x, y, alpha: float, prune: bool = True) -> Geodesic:
    """Optimal path from ``q(x)`` to ``q(y)``; ``T(x, y)`` is its total."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    sample._require_points()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_inside(sample, x, y)
    idx = sample.index
    a, _ = _kernels.nearest(*idx.args, x)
    b, _ = _kernels.nearest(*idx.args, y)
    if a == b:
        pos = np.array([a])
        settled = 1
    else:
        budget = chain_upper_bound(sample, a, b, alpha) * (1 + 1e-9)
        dist, pred, settled = _solve(sample, a, np.array([b]), alpha, budget, prune)
        if not np.isfinite(dist[b]):
            raise RuntimeError("target unreachable; certificate or budget is inconsistent")
        chain = [b]
        while chain[-1] != a:
            chain.append(pred[chain[-1]])
        pos = np.array(chain[::-1])
    pts = idx.points[pos]
    cost = PathCost.of(pts, alpha)
    return Geodesic(
        path=pts,
        total=cost.total,
        max_edge=cost.max_edge,
        x=x,
        y=y,
        qx=pts[0],
        qy=pts[-1],
        indices=idx.order[pos],
        touches_boundary=bool(np.any(sample.box.in_outer_shell(pts, SHELL_FRACTION))),
        settled=int(settled),
    )


def passage_times(sample: PoissonSample, x, ys, alpha: float) -> np.ndarray:
    """``T(x, y)`` for every row of ``ys`` from one Dijkstra run."""
    sample._require_points()
    x = np.asarray(x, dtype=float)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    _check_inside(sample, x, *ys)
    idx = sample.index
    a, _ = _kernels.nearest(*idx.args, x)
    tgt, _ = _kernels.nearest_batch(*idx.args, ys)
    uniq = np.unique(tgt)
    budget = max(chain_upper_bound(sample, a, int(b), alpha) for b in uniq) * (1 + 1e-9)
    dist, _, _ = _solve(sample, a, uniq, alpha, budget, True)
    return dist[tgt]


def edge_dominated(a, b, sample: PoissonSample, alpha: float) -> bool:
    """True iff some other sample point ``c`` has ``|a-c|^alpha + |c-b|^alpha <= |a-b|^alpha``.

    Every such ``c`` lies within ``|a-b|`` of both endpoints, hence within
    ``sqrt(3)/2 |a-b|`` of the midpoint; candidates come from a ball query.
    """
    from .poisson import ball_query

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ell = float(np.linalg.norm(a - b))
    if ell == 0:
        return False
    cand = sample.points[ball_query(sample, (a + b) / 2, ell * math.sqrt(3) / 2 * (1 + 1e-12))]
    if cand.size == 0:
        return False
    cand = cand[~(np.all(cand == a, axis=1) | np.all(cand == b, axis=1))]
    if cand.size == 0:
        return False
    cost = np.linalg.norm(cand - a, axis=1) ** alpha + np.linalg.norm(cand - b, axis=1) ** alpha
    return bool(np.any(cost <= ell**alpha))


def perturbation_gap(sample: PoissonSample, x, y, y2, alpha: float) -> tuple[float, float]:
    """``(|T(x,y) - T(x,y2)|, (2|q(y)-y| + 2|y-y2|)**alpha)``."""
    t1 = geodesic(sample, x, y, alpha).total
    t2 = geodesic(sample, x, y2, alpha).total
    y = np.asarray(y, dtype=float)
    qy = sample.points[sample.nearest_index(y)]
    bound = (2 * np.linalg.norm(qy - y) + 2 * np.linalg.norm(y - np.asarray(y2, dtype=float))) ** alpha
    return abs(t1 - t2), float(bound)
