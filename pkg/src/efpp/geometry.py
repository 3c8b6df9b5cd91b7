"""Deterministic geometry for Euclidean first-passage percolation.

Points are plain ``numpy`` vectors of length ``d``.  Regions are small
frozen dataclasses with a vectorised ``contains``.  Nothing here touches
randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Dimension, cost exponent and the derived exponent algebra."""

    d: int
    alpha: float
    kappa1: float
    kappa2: float
    kappa3: float
    gamma: float
    beta: float
    eta: float


def derive_constants(d: int, alpha: float, kappa3: float = 0.4) -> ModelParams:
    """Build :class:`ModelParams` from ``(d, alpha, kappa3)``.

    ``kappa1 = min(1, d/alpha)``, ``kappa2 = 1/(4 alpha + 3)``,
    ``gamma = 1/(kappa1 kappa3)``, ``beta = 1/(2 kappa1)``, ``eta = beta + gamma``.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1 (the model degenerates otherwise), got {alpha!r}")
    if not 0 < kappa3 < 0.5:
        raise ValueError(f"kappa3 must lie in (0, 1/2), got {kappa3!r}")
    d = int(d)
    alpha = float(alpha)
    kappa1 = min(1.0, d / alpha)
    kappa2 = 1.0 / (4.0 * alpha + 3.0)
    gamma = 1.0 / (kappa1 * kappa3)
    beta = 1.0 / (2.0 * kappa1)
    return ModelParams(d, alpha, kappa1, kappa2, float(kappa3), gamma, beta, beta + gamma)


def iterated_log(k: int, x: float) -> float:
    """Natural log applied ``k`` times; ``k = 0`` returns ``x``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    value = float(x)
    for _ in range(k):
        if value <= 0:
            raise ValueError(f"iterated log undefined: intermediate value {value} <= 0")
        value = math.log(value)
    return value


def iterated_exp(k: int, x: float) -> float:
    value = float(x)
    for _ in range(k):
        value = math.exp(value)
    return value


def theta(x) -> float:
    """Angle in ``[0, pi]`` between ``x`` and the first basis vector."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("theta is undefined at the zero vector")
    return float(np.arccos(np.clip(x[0] / norm, -1.0, 1.0)))


def point_segment_distance(points, a, b) -> np.ndarray:
    """Euclidean distance from each row of ``points`` to the segment ``[a, b]``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def dist_max(points, a, b) -> float | None:
    """One-sided Hausdorff distance from a finite point set to segment ``[a, b]``.

    Returns ``None`` for an empty set so that "no points" is never confused
    with "distance zero".
    """
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return None
    return float(point_segment_distance(points, a, b).max())


@dataclass(frozen=True)
class RotationMap:
    """Rotation taking ``e1`` to ``target`` inside ``span{e1, target}``."""

    matrix: np.ndarray
    target: np.ndarray

    def __call__(self, points):
        return np.asarray(points, dtype=float) @ self.matrix.T

    def inverse(self, points):
        return np.asarray(points, dtype=float) @ self.matrix


def rotation_to(target) -> RotationMap:
    target = np.asarray(target, dtype=float)
    norm = np.linalg.norm(target)
    if norm == 0:
        raise ValueError("cannot rotate onto the zero vector")
    t = target / norm
    d = t.size
    e1 = np.zeros(d)
    e1[0] = 1.0
    perp = t - t[0] * e1
    sin = np.linalg.norm(perp)
    cos = t[0]
    eye = np.eye(d)
    if sin < 1e-15:
        if cos > 0:
            return RotationMap(eye, t)
        # half turn in the (e1, e2) plane
        m = eye.copy()
        m[0, 0] = m[1, 1] = -1.0
        return RotationMap(m, t)
    w = perp / sin
    m = (
        eye
        + (cos - 1.0) * (np.outer(e1, e1) + np.outer(w, w))
        + sin * (np.outer(w, e1) - np.outer(e1, w))
    )
    return RotationMap(m, t)


def rotation_containment_factor(a: float, b: float, theta: float) -> float:
    """Scale ``a / (|sin| b + |cos| a)`` for fitting ``B_{a,b}`` in its rotation.

    ``B_{a,b} = {|x1| <= a, ||x2|| <= b}`` rotated by angle ``theta`` away
    from ``e1``; requires ``b >= a > 0``. In the plane this is the largest
    ``s`` with ``s * B_{a,b}`` inside the rotated box. For ``d >= 3`` the
    box is a cylinder and the value can be too large when ``b / a`` is near
    one and ``theta`` is large; see :func:`exact_containment_factor`.
    """
    if not (b >= a > 0):
        raise ValueError("require b >= a > 0")
    return a / (abs(math.sin(theta)) * b + abs(math.cos(theta)) * a)


def exact_containment_factor(a: float, b: float, theta: float, d: int) -> float:
    """Largest ``s`` with ``s * B_{a,b}`` inside the rotated ``B_{a,b}`` in ``R^d``.

    Only rim points ``(+-a, b u)`` matter. After the inverse rotation their
    longitudinal part is at most ``a|cos| + b|sin|``. In the plane the
    transverse part peaks at ``a|sin| + b|cos|``. With a spare transverse
    direction (``d >= 3``) the peak is ``sqrt(a^2 + b^2)`` once
    ``a|cos| <= b|sin|``.
    """
    if not (b >= a > 0):
        raise ValueError("require b >= a > 0")
    if d < 2:
        raise ValueError("require d >= 2")
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    if d >= 3 and a * c <= b * s:
        transverse = math.hypot(a, b)
    else:
        transverse = a * s + b * c
    return min(a / (a * c + b * s), b / transverse)


def is_regular(pairs, c: float, K: float, n: float, psi) -> bool:
    """Whether every ``(x, y)`` pair is ``(c, K)``-regular of order ``n``.

    ``psi`` is a :class:`efpp.scales.ScaleFunction`; its iterate level fixes
    the starred transverse scale ``u*(n)``.
    """
    if not 1 <= c <= math.sqrt(n):
        raise ValueError("require 1 <= c <= sqrt(n)")
    slope = K * psi(n) / psi.u_star(n)
    for x, y in pairs:
        z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        length = float(np.linalg.norm(z))
        if length < n / c:
            return False
        # rescale so tiny components do not underflow when squared
        scale = float(np.max(np.abs(z[1:])))
        transverse = scale * float(np.linalg.norm(z[1:] / scale)) if scale > 0 else 0.0
        # |tan theta| without the division blowing up near theta = pi/2
        if transverse > slope * abs(z[0]):
            return False
    return True


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box ``{y : |y_i - center_i| <= half_widths_i}``."""

    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        hw = np.asarray(self.half_widths, dtype=float)
        if center.shape != hw.shape or center.ndim != 1:
            raise ValueError("center and half_widths must be vectors of equal length")
        if np.any(hw < 0) or not np.all(np.isfinite(hw)) or not np.all(np.isfinite(center)):
            raise ValueError("half widths must be finite and non-negative")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_widths", hw)

    @classmethod
    def from_bounds(cls, lo, hi) -> "BoxRegion":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return cls((lo + hi) / 2, (hi - lo) / 2)

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def lo(self) -> np.ndarray:
        return self.center - self.half_widths

    @property
    def hi(self) -> np.ndarray:
        return self.center + self.half_widths

    @property
    def volume(self) -> float:
        return float(np.prod(2 * self.half_widths))

    @property
    def diameter(self) -> float:
        return float(2 * np.linalg.norm(self.half_widths))

    def contains(self, points, slack: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(np.abs(points - self.center) <= self.half_widths + slack, axis=1)

    def in_outer_shell(self, points, fraction: float = 0.05) -> np.ndarray:
        """Points within ``fraction`` of a half width from the boundary."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inner = self.half_widths * (1 - fraction)
        return np.any(np.abs(points - self.center) > inner, axis=1)


@dataclass(frozen=True)
class CylinderRegion:
    """``{|y1| <= L, ||y2|| <= r}`` in a rotated and translated frame."""

    longitudinal_half_width: float
    transverse_radius: float
    rotation: RotationMap | None = None
    translation: np.ndarray | None = None

    def to_frame(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.translation is not None:
            points = points - self.translation
        if self.rotation is not None:
            points = self.rotation.inverse(points)
        return points

    def from_frame(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.rotation is not None:
            points = self.rotation(points)
        if self.translation is not None:
            points = points + self.translation
        return points

    def contains(self, points, slack: float = 0.0) -> np.ndarray:
        y = self.to_frame(points)
        return (np.abs(y[:, 0]) <= self.longitudinal_half_width + slack) & (
            np.linalg.norm(y[:, 1:], axis=1) <= self.transverse_radius + slack
        )

    def probe_points(self, d: int, resolution: int) -> np.ndarray:
        """Corners, face centres and a ``resolution**d`` interior grid."""
        L, r = self.longitudinal_half_width, self.transverse_radius
        pts = []
        transverse_dirs = [np.zeros(d - 1)]
        for j in range(d - 1):
            for sgn in (-1.0, 1.0):
                e = np.zeros(d - 1)
                e[j] = sgn * r
                transverse_dirs.append(e)
        for x1 in (-L, 0.0, L):
            for t in transverse_dirs:
                pts.append(np.concatenate([[x1], t]))
        if resolution > 0:
            half = r / math.sqrt(d - 1)
            axes = [(np.arange(resolution) + 0.5) / resolution * 2 * L - L]
            axes += [(np.arange(resolution) + 0.5) / resolution * 2 * half - half] * (d - 1)
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
            pts.extend(mesh)
        pts = np.unique(np.round(np.asarray(pts), 12), axis=0)
        return self.from_frame(pts)


@dataclass(frozen=True)
class SlabRegion:
    """``{y : |y . axis - lam| <= half_width}``."""

    lam: float
    half_width: float
    axis: np.ndarray = field(default=None)

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        axis = self.axis
        if axis is None:
            proj = points[:, 0]
        else:
            proj = points @ (np.asarray(axis, dtype=float) / np.linalg.norm(axis))
        return np.abs(proj - self.lam) <= self.half_width


def lens_inradius_ratio(alpha: float) -> float:
    """Radius (per unit edge length) of the largest ball about an edge's midpoint
    inside ``{c : |a-c|^alpha + |c-b|^alpha <= |a-b|^alpha}``.

    For ``alpha >= 2`` the region contains the ball on the diameter ``ab``;
    below 2 the narrowest point is transverse at the midpoint, where both
    distances equal ``2**(-1/alpha)``.
    """
    if alpha >= 2:
        return 0.5
    return math.sqrt(4.0 ** (-1.0 / alpha) - 0.25)
