"""Reference solvers used only to check the pruned one.

Nothing here shares code with the grid index or the compiled kernels: the
nearest point is a linear scan and Dijkstra runs on the dense complete graph.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .geodesic import Geodesic, PathCost
from .poisson import PoissonSample

MAX_DIJKSTRA = 2000
MAX_EXHAUSTIVE = 9


class OracleSizeError(ValueError):
    pass


def linear_nearest(points: np.ndarray, x) -> int:
    d2 = np.sum((points - np.asarray(x, dtype=float)) ** 2, axis=1)
    best = np.flatnonzero(d2 == d2.min())
    if best.size == 1:
        return int(best[0])
    # lexicographic tie-break
    return int(best[np.lexsort(points[best].T[::-1])[0]])


def complete_graph_dijkstra(points: np.ndarray, src: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Distances and predecessors from ``src`` over every point pair."""
    n = len(points)
    if n > MAX_DIJKSTRA:
        raise OracleSizeError(f"{n} points exceeds complete-graph limit {MAX_DIJKSTRA}")
    cost = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2) ** alpha
    dist = np.full(n, np.inf)
    hops = np.full(n, np.iinfo(np.int64).max)
    pred = np.full(n, -1)
    dist[src] = 0.0
    hops[src] = 0
    done = np.zeros(n, bool)
    heap = [(0.0, src)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u] or du > dist[u]:
            continue
        done[u] = True
        for v in range(n):
            if done[v] or v == u:
                continue
            nd = du + cost[u, v]
            if nd < dist[v] * (1 - 1e-12) or (nd <= dist[v] * (1 + 1e-12) and hops[u] + 1 < hops[v]):
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
                hops[v] = hops[u] + 1
                pred[v] = u
    return dist, pred


def exhaustive_min_time(points: np.ndarray, src: int, dst: int, alpha: float) -> tuple[float, tuple]:
    """Minimum over every simple path ``src -> dst`` by enumeration."""
    n = len(points)
    if n > MAX_EXHAUSTIVE:
        raise OracleSizeError(f"{n} points exceeds exhaustive limit {MAX_EXHAUSTIVE}")
    if src == dst:
        return 0.0, (src,)
    others = [i for i in range(n) if i not in (src, dst)]
    best, best_path = np.inf, None
    for k in range(len(others) + 1):
        for middle in itertools.permutations(others, k):
            path = (src, *middle, dst)
            pts = points[list(path)]
            t = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1) ** alpha))
            if t < best:
                best, best_path = t, path
    return best, best_path


def brute_force_geodesic(sample: PoissonSample, x, y, alpha: float, exhaustive: bool = False) -> Geodesic:
    """Geodesic by dense Dijkstra, or by full path enumeration when ``exhaustive``."""
    pts = np.asarray(sample.points)
    if len(pts) == 0:
        raise ValueError("sample has no points")
    a = linear_nearest(pts, x)
    b = linear_nearest(pts, y)
    if exhaustive:
        _, chain = exhaustive_min_time(pts, a, b, alpha)
        chain = list(chain)
    else:
        _, pred = complete_graph_dijkstra(pts, a, alpha)
        chain = [b]
        while chain[-1] != a:
            chain.append(int(pred[chain[-1]]))
        chain.reverse()
    path = pts[chain]
    cost = PathCost.of(path, alpha)
    return Geodesic(
        path=path, total=cost.total, max_edge=cost.max_edge,
        x=np.asarray(x, float), y=np.asarray(y, float),
        qx=path[0], qy=path[-1], indices=np.asarray(chain),
    )
