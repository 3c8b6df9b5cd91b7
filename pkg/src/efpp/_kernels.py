"""Compiled kernels over a uniform cell grid.

Grid layout: points sorted by flat (C-order) cell id, ``cell_start`` is the
CSR offset array of length ``ncells + 1``.  All kernels work in sorted-point
index space.
"""

import math

import numpy as np
from numba import njit

_TIE_RTOL = 1e-12


@njit(cache=True)
def _strides(shape):
    d = shape.size
    s = np.empty(d, np.int64)
    acc = 1
    for j in range(d - 1, -1, -1):
        s[j] = acc
        acc *= shape[j]
    return s


@njit(cache=True)
def _cell_of(p, origin, cs, shape):
    d = shape.size
    c = np.empty(d, np.int64)
    for j in range(d):
        v = int(math.floor((p[j] - origin[j]) / cs))
        if v < 0:
            v = 0
        elif v >= shape[j]:
            v = shape[j] - 1
        c[j] = v
    return c


@njit(cache=True)
def _lex_less(pts, i, j):
    for t in range(pts.shape[1]):
        if pts[i, t] < pts[j, t]:
            return True
        if pts[i, t] > pts[j, t]:
            return False
    return False


@njit(cache=True)
def _box_sq_dist(p, cell, origin, cs):
    # squared distance from p to the closed cell box
    acc = 0.0
    for j in range(cell.size):
        lo = origin[j] + cell[j] * cs
        hi = lo + cs
        if p[j] < lo:
            acc += (lo - p[j]) ** 2
        elif p[j] > hi:
            acc += (p[j] - hi) ** 2
    return acc


@njit(cache=True)
def nearest(pts, cell_start, origin, cs, shape, q):
    """Index of the nearest point to ``q``; exact ties go to the lexicographically smallest."""
    d = shape.size
    strides = _strides(shape)
    home = _cell_of(q, origin, cs, shape)
    best = -1
    best_d2 = np.inf
    maxr = 0
    for j in range(d):
        maxr = max(maxr, shape[j])
    cur = np.empty(d, np.int64)
    lo = np.empty(d, np.int64)
    hi = np.empty(d, np.int64)
    for r in range(maxr + 1):
        # every cell at Chebyshev index distance r from home
        any_cell = False
        for j in range(d):
            lo[j] = max(home[j] - r, 0)
            hi[j] = min(home[j] + r, shape[j] - 1)
            cur[j] = lo[j]
        shell_min = np.inf
        while True:
            cheb = 0
            for j in range(d):
                cheb = max(cheb, abs(cur[j] - home[j]))
            if cheb == r:
                any_cell = True
                bd = _box_sq_dist(q, cur, origin, cs)
                if bd < shell_min:
                    shell_min = bd
                if bd <= best_d2:
                    flat = 0
                    for j in range(d):
                        flat += cur[j] * strides[j]
                    for i in range(cell_start[flat], cell_start[flat + 1]):
                        d2 = 0.0
                        for t in range(d):
                            d2 += (pts[i, t] - q[t]) ** 2
                        if d2 < best_d2 or (d2 == best_d2 and best >= 0 and _lex_less(pts, i, best)):
                            best_d2 = d2
                            best = i
            # odometer increment
            j = d - 1
            while j >= 0:
                cur[j] += 1
                if cur[j] <= hi[j]:
                    break
                cur[j] = lo[j]
                j -= 1
            if j < 0:
                break
        if not any_cell:
            break
        # every later shell is at least (r * cs) away from q's own cell
        if best >= 0 and (r * cs) ** 2 > best_d2:
            break
    return best, math.sqrt(best_d2) if best >= 0 else np.inf


@njit(cache=True)
def nearest_batch(pts, cell_start, origin, cs, shape, queries):
    m = queries.shape[0]
    idx = np.empty(m, np.int64)
    dist = np.empty(m, np.float64)
    for i in range(m):
        idx[i], dist[i] = nearest(pts, cell_start, origin, cs, shape, queries[i])
    return idx, dist


@njit(cache=True)
def ball(pts, cell_start, origin, cs, shape, q, radius):
    """Sorted indices of points with distance <= radius from ``q``."""
    d = shape.size
    strides = _strides(shape)
    lo = np.empty(d, np.int64)
    hi = np.empty(d, np.int64)
    cur = np.empty(d, np.int64)
    for j in range(d):
        lo[j] = max(int(math.floor((q[j] - radius - origin[j]) / cs)), 0)
        hi[j] = min(int(math.floor((q[j] + radius - origin[j]) / cs)), shape[j] - 1)
        if lo[j] > hi[j]:
            return np.empty(0, np.int64)
        cur[j] = lo[j]
    out = []
    r2 = radius * radius
    while True:
        flat = 0
        for j in range(d):
            flat += cur[j] * strides[j]
        for i in range(cell_start[flat], cell_start[flat + 1]):
            d2 = 0.0
            for t in range(d):
                d2 += (pts[i, t] - q[t]) ** 2
            if d2 <= r2:
                out.append(i)
        j = d - 1
        while j >= 0:
            cur[j] += 1
            if cur[j] <= hi[j]:
                break
            cur[j] = lo[j]
            j -= 1
        if j < 0:
            break
    res = np.array(out, dtype=np.int64) if len(out) > 0 else np.empty(0, np.int64)
    res.sort()
    return res


@njit(cache=True)
def cover_bounds(pts, cell_start, origin, cs, shape, sub):
    """Per-cell upper bound on ``sup_x dist(x, points)`` over the cell.

    Each cell is split into ``sub**d`` sub-cells; the bound is the largest
    sub-cell-centre nearest distance plus the sub-cell half diagonal.
    Candidates come from the surrounding 5**d block, which is exact whenever
    the best distance found is at most ``2 cs``; otherwise a full search runs.
    Also returns the largest centre distance (a lower estimate).
    """
    d = shape.size
    ncell = cell_start.size - 1
    strides = _strides(shape)
    h = cs / sub
    half_diag = h * math.sqrt(d) / 2
    bound = np.empty(ncell, np.float64)
    lower = 0.0
    cell = np.empty(d, np.int64)
    subi = np.empty(d, np.int64)
    q = np.empty(d, np.float64)
    lo = np.empty(d, np.int64)
    hi = np.empty(d, np.int64)
    cur = np.empty(d, np.int64)
    nsub = sub**d
    cand = np.empty(64, np.int64)
    for flat in range(ncell):
        rem = flat
        for j in range(d):
            cell[j] = rem // strides[j]
            rem = rem % strides[j]
            lo[j] = max(cell[j] - 2, 0)
            hi[j] = min(cell[j] + 2, shape[j] - 1)
            cur[j] = lo[j]
        m = 0
        while True:
            f = 0
            for j in range(d):
                f += cur[j] * strides[j]
            for i in range(cell_start[f], cell_start[f + 1]):
                if m == cand.size:
                    grown = np.empty(cand.size * 2, np.int64)
                    grown[:m] = cand[:m]
                    cand = grown
                cand[m] = i
                m += 1
            j = d - 1
            while j >= 0:
                cur[j] += 1
                if cur[j] <= hi[j]:
                    break
                cur[j] = lo[j]
                j -= 1
            if j < 0:
                break
        worst = 0.0
        for s in range(nsub):
            r = s
            for j in range(d - 1, -1, -1):
                subi[j] = r % sub
                r //= sub
            for j in range(d):
                q[j] = origin[j] + cell[j] * cs + (subi[j] + 0.5) * h
            best = np.inf
            for c in range(m):
                i = cand[c]
                d2 = 0.0
                for t in range(d):
                    d2 += (pts[i, t] - q[t]) ** 2
                if d2 < best:
                    best = d2
            dist = math.sqrt(best)
            if dist > 2 * cs:
                _, dist = nearest(pts, cell_start, origin, cs, shape, q)
            if dist > worst:
                worst = dist
        bound[flat] = worst + half_diag
        if worst > lower:
            lower = worst
    return bound, lower


@njit(cache=True)
def certified_radii(bound, origin, cs, shape, ratio):
    """Per-cell neighbour radius beyond which every edge is two-hop dominated.

    An edge of length ``l`` whose midpoint sits in cell ``c`` is dominated once
    ``ratio * l > bound[c]``.  Its midpoint lies within ``l/2`` of the edge's
    start, so a start in cell ``a`` needs a radius ``bound[c]/ratio`` only when
    ``mindist(a, c) <= bound[c] / (2 ratio)``.
    """
    d = shape.size
    ncell = bound.size
    strides = _strides(shape)
    radii = np.zeros(ncell, np.float64)
    cell = np.empty(d, np.int64)
    lo = np.empty(d, np.int64)
    hi = np.empty(d, np.int64)
    cur = np.empty(d, np.int64)
    for flat in range(ncell):
        need = bound[flat] / ratio
        reach = need / 2
        rem = flat
        for j in range(d):
            cell[j] = rem // strides[j]
            rem = rem % strides[j]
        span = int(math.ceil(reach / cs))
        for j in range(d):
            lo[j] = max(cell[j] - span, 0)
            hi[j] = min(cell[j] + span, shape[j] - 1)
            cur[j] = lo[j]
        while True:
            gap = 0.0
            for j in range(d):
                k = abs(cur[j] - cell[j])
                if k > 1:
                    gap += ((k - 1) * cs) ** 2
            if gap <= reach * reach:
                other = 0
                for j in range(d):
                    other += cur[j] * strides[j]
                if radii[other] < need:
                    radii[other] = need
            j = d - 1
            while j >= 0:
                cur[j] += 1
                if cur[j] <= hi[j]:
                    break
                cur[j] = lo[j]
                j -= 1
            if j < 0:
                break
    return radii


@njit(cache=True)
def _heap_push(keys, vals, size, key, val):
    if size == keys.size:
        nk = np.empty(keys.size * 2, np.float64)
        nv = np.empty(vals.size * 2, np.int64)
        nk[:size] = keys[:size]
        nv[:size] = vals[:size]
        keys, vals = nk, nv
    i = size
    keys[i] = key
    vals[i] = val
    while i > 0:
        p = (i - 1) // 2
        if keys[p] < keys[i] or (keys[p] == keys[i] and vals[p] <= vals[i]):
            break
        keys[p], keys[i] = keys[i], keys[p]
        vals[p], vals[i] = vals[i], vals[p]
        i = p
    return keys, vals, size + 1


@njit(cache=True)
def _heap_pop(keys, vals, size):
    key, val = keys[0], vals[0]
    size -= 1
    keys[0], vals[0] = keys[size], vals[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (keys[r] < keys[l] or (keys[r] == keys[l] and vals[r] < vals[l])):
            c = r
        if keys[i] < keys[c] or (keys[i] == keys[c] and vals[i] <= vals[c]):
            break
        keys[i], keys[c] = keys[c], keys[i]
        vals[i], vals[c] = vals[c], vals[i]
        i = c
    return key, val, size


@njit(cache=True)
def lazy_dijkstra(pts, cell_start, origin, cs, shape, cell_radius, cell_bound,
                  alpha, ratio, src, targets, budget, prune):
    """Single-source Dijkstra on the complete graph with cost ``|a-b|**alpha``.

    Neighbours of a settled node ``u`` are generated from the grid within
    ``min(cell_radius[cell(u)], (budget - D[u])**(1/alpha))``; with ``prune``
    an edge is skipped when the covering bound of its midpoint cell certifies
    a two-hop replacement.  Stops once every target is settled.  ``budget``
    must upper-bound every requested target distance; for a single target it
    tightens as the target's tentative distance drops.

    Near-equal tentative distances (relative 1e-12) prefer fewer hops, then
    the predecessor with the smaller index.
    """
    n, d = pts.shape
    strides = _strides(shape)
    dist = np.full(n, np.inf)
    hops = np.full(n, np.iinfo(np.int64).max)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    is_target = np.zeros(n, np.bool_)
    for t in targets:
        is_target[t] = True
    remaining = 0
    for i in range(n):
        if is_target[i]:
            remaining += 1
    single = targets.size == 1
    keys = np.empty(1024, np.float64)
    vals = np.empty(1024, np.int64)
    size = 0
    dist[src] = 0.0
    hops[src] = 0
    keys, vals, size = _heap_push(keys, vals, size, 0.0, src)
    lo = np.empty(d, np.int64)
    hi = np.empty(d, np.int64)
    cur = np.empty(d, np.int64)
    inv_alpha = 1.0 / alpha
    settled = 0
    while size > 0 and remaining > 0:
        du, u, size = _heap_pop(keys, vals, size)
        if done[u] or du > dist[u]:
            continue
        done[u] = True
        settled += 1
        if is_target[u]:
            remaining -= 1
            if remaining == 0:
                break
        if single:
            t0 = targets[0]
            if dist[t0] < budget:
                budget = dist[t0]
        slack = budget - du
        if slack <= 0:
            continue
        flat_u = 0
        for j in range(d):
            cj = int(math.floor((pts[u, j] - origin[j]) / cs))
            cj = min(max(cj, 0), shape[j] - 1)
            flat_u += cj * strides[j]
        radius = min(cell_radius[flat_u], slack**inv_alpha)
        r2 = radius * radius
        for j in range(d):
            lo[j] = max(int(math.floor((pts[u, j] - radius - origin[j]) / cs)), 0)
            hi[j] = min(int(math.floor((pts[u, j] + radius - origin[j]) / cs)), shape[j] - 1)
            cur[j] = lo[j]
        empty = False
        for j in range(d):
            if lo[j] > hi[j]:
                empty = True
        if empty:
            continue
        while True:
            gap = _box_sq_dist(pts[u], cur, origin, cs)
            if gap <= r2:
                flat = 0
                for j in range(d):
                    flat += cur[j] * strides[j]
                for v in range(cell_start[flat], cell_start[flat + 1]):
                    if done[v]:
                        continue
                    l2 = 0.0
                    for t in range(d):
                        l2 += (pts[v, t] - pts[u, t]) ** 2
                    if l2 > r2:
                        continue
                    l = math.sqrt(l2)
                    if prune:
                        mflat = 0
                        for t in range(d):
                            mt = int(math.floor((0.5 * (pts[v, t] + pts[u, t]) - origin[t]) / cs))
                            mt = min(max(mt, 0), shape[t] - 1)
                            mflat += mt * strides[t]
                        if cell_bound[mflat] < ratio * l:
                            continue
                    nd = du + l**alpha
                    cur_d = dist[v]
                    nh = hops[u] + 1
                    better = False
                    if nd < cur_d * (1 - _TIE_RTOL):
                        better = True
                    elif nd <= cur_d * (1 + _TIE_RTOL):
                        if nh < hops[v] or (nh == hops[v] and (nd < cur_d or u < pred[v])):
                            better = True
                    if better:
                        push = nd < cur_d
                        if nd < cur_d:
                            dist[v] = nd
                        hops[v] = nh
                        pred[v] = u
                        if push:
                            keys, vals, size = _heap_push(keys, vals, size, nd, v)
            j = d - 1
            while j >= 0:
                cur[j] += 1
                if cur[j] <= hi[j]:
                    break
                cur[j] = lo[j]
                j -= 1
            if j < 0:
                break
    return dist, pred, settled
