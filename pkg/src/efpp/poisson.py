"""Seeded homogeneous Poisson samples in boxes, with a uniform-grid index."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels
from .geometry import BoxRegion

MASK64 = (1 << 64) - 1
DEFAULT_MAX_POINTS = 10**8


class CapacityError(RuntimeError):
    """Expected point count exceeds the configured budget."""


class EmptySampleError(ValueError):
    pass


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedPolicy:
    """Counter-based seed for one replicate.

    ``stream`` separates families of replicates (e.g. different ``n``) that
    share a master seed.
    """

    master_seed: int
    replicate_index: int = 0
    stream: int = 0

    @property
    def seed(self) -> int:
        base = splitmix64((self.master_seed & MASK64) ^ splitmix64(self.stream & MASK64))
        return splitmix64(base ^ ((self.replicate_index * 0xD1B54A32D192ED03) & MASK64))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass(frozen=True)
class GridIndex:
    """Points bucketed into cubic cells of side ``cell_size`` (CSR layout)."""

    origin: np.ndarray
    cell_size: float
    shape: np.ndarray
    order: np.ndarray  # sorted position -> original index
    points: np.ndarray  # points in sorted order
    cell_start: np.ndarray

    @classmethod
    def build(cls, points: np.ndarray, box: BoxRegion, cell_size: float) -> "GridIndex":
        d = box.d
        origin = box.lo.copy()
        extent = 2 * box.half_widths
        shape = np.maximum(1, np.ceil(extent / cell_size)).astype(np.int64)
        if points.shape[0]:
            cells = np.floor((points - origin) / cell_size).astype(np.int64)
            np.clip(cells, 0, shape - 1, out=cells)
            flat = np.ravel_multi_index(cells.T, tuple(shape))
        else:
            flat = np.empty(0, np.int64)
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=int(np.prod(shape)))
        cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        sorted_pts = np.ascontiguousarray(points[order]).reshape(-1, d)
        return cls(origin, float(cell_size), shape, order, sorted_pts, cell_start)

    @property
    def args(self):
        return self.points, self.cell_start, self.origin, self.cell_size, self.shape


@dataclass(frozen=True, eq=False)
class PoissonSample:
    """An immutable point set in ``box`` plus its grid index."""

    points: np.ndarray
    box: BoxRegion
    intensity: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.box.d)
        if pts.shape[0] and not np.all(self.box.contains(pts, slack=1e-12)):
            raise ValueError("sample points must lie inside the box")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, box: BoxRegion | None = None, pad: float = 1.0) -> "PoissonSample":
        """Wrap an explicit point set (tests, crafted configurations)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if box is None:
            lo, hi = pts.min(axis=0) - pad, pts.max(axis=0) + pad
            box = BoxRegion.from_bounds(lo, hi)
        vol = box.volume
        intensity = pts.shape[0] / vol if vol > 0 else 1.0
        return cls(pts, box, intensity)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.box.d

    @cached_property
    def index(self) -> GridIndex:
        n = max(len(self), 1)
        vol = self.box.volume
        side = self.intensity ** (-1.0 / self.d) if self.intensity > 0 else 1.0
        if vol > 0:
            # never more than ~one cell per point
            side = max(side, (vol / n) ** (1.0 / self.d))
        else:
            side = max(side, 1.0)
        return GridIndex.build(self.points, self.box, side)

    @cached_property
    def cover(self) -> tuple[np.ndarray, float]:
        """Per-cell covering-radius upper bounds and the grid lower estimate."""
        self._require_points()
        bound, lower = _kernels.cover_bounds(*self.index.args, 2)
        return bound, float(lower)

    def _require_points(self):
        if len(self) == 0:
            raise EmptySampleError("sample has no points")

    def nearest_index(self, x) -> int:
        """Original index of ``q(x)``."""
        self._require_points()
        pos, _ = _kernels.nearest(*self.index.args, np.asarray(x, dtype=float))
        return int(self.index.order[pos])

    def dump(self, path) -> None:
        write_points(path, self.points, f"# efpp-points d={self.d} seed={self.seed if self.seed is not None else 'none'}")


def sample_poisson(box: BoxRegion, intensity: float, seed: SeedPolicy | int,
                   max_points: float = DEFAULT_MAX_POINTS) -> PoissonSample:
    """Draw ``Poisson(intensity * volume)`` i.i.d. uniform points in ``box``."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    policy = seed if isinstance(seed, SeedPolicy) else SeedPolicy(int(seed))
    mean = intensity * box.volume
    if mean > max_points:
        raise CapacityError(f"expected {mean:.3g} points exceeds budget {max_points:.3g}")
    rng = policy.generator()
    count = int(rng.poisson(mean)) if mean > 0 else 0
    pts = box.lo + rng.random((count, box.d)) * (2 * box.half_widths)
    return PoissonSample(pts, box, float(intensity), policy.seed)


def nearest_point(sample: PoissonSample, x) -> np.ndarray:
    """``q(x)``: the sample point closest to ``x`` (lexicographic tie-break)."""
    return sample.points[sample.nearest_index(x)]


def ball_query(sample: PoissonSample, center, radius: float) -> np.ndarray:
    """Original indices of sample points within ``radius`` of ``center``, ascending."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if len(sample) == 0:
        return np.empty(0, np.int64)
    pos = _kernels.ball(*sample.index.args, np.asarray(center, dtype=float), float(radius))
    return np.sort(sample.index.order[pos])


@dataclass(frozen=True)
class EmptyBall:
    """Grid estimate of ``sup_x ||x - q(x)||`` over a region.

    ``radius`` is a lower estimate; the continuum value is at most
    ``radius + error_bound``.
    """

    radius: float
    error_bound: float
    witness: np.ndarray


def grid_centers(region: BoxRegion, spacing: float) -> np.ndarray:
    axes = []
    for lo, hi in zip(region.lo, region.hi):
        m = max(1, int(math.ceil((hi - lo) / spacing - 1e-12)))
        axes.append(lo + (np.arange(m) + 0.5) * (hi - lo) / m if hi > lo else np.array([lo]))
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, region.d)


def largest_empty_ball_radius(sample: PoissonSample, region: BoxRegion, grid_spacing: float) -> EmptyBall:
    if grid_spacing <= 0:
        raise ValueError("grid_spacing must be positive")
    sample._require_points()
    centers = grid_centers(region, grid_spacing)
    _, dist = _kernels.nearest_batch(*sample.index.args, centers)
    i = int(np.argmax(dist))
    # actual cell spacing never exceeds grid_spacing
    return EmptyBall(float(dist[i]), grid_spacing * math.sqrt(region.d) / 2, centers[i])


def write_points(path, points, header: str) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(header + "\n")
        for p in np.atleast_2d(points):
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")


def read_points(path) -> tuple[dict, np.ndarray]:
    """Parse a point dump; returns ``(header fields, points)``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# efpp-"):
        raise ValueError("missing efpp header")
    meta = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
    rows = [list(map(float, ln.split())) for ln in lines[1:] if ln.strip()]
    d = int(meta["d"]) if "d" in meta else (len(rows[0]) if rows else 0)
    return meta, np.asarray(rows, dtype=float).reshape(-1, d)
