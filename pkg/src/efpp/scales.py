"""Concentration scales and the length scales built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ModelParams, iterated_log


@dataclass(frozen=True)
class ScaleFunction:
    """A concentration scale ``psi`` plus the iterate level ``k``.

    ``kind`` is ``"sqrt"``, ``"power"`` (``psi(n) = n**p``) or ``"table"``
    (log-log linear interpolation through ``table_n``/``table_psi``).
    ``phi(n) = log^(k-1) n`` enters the derived scales.
    """

    kind: str = "sqrt"
    p: float = 0.5
    k: int = 2
    params: ModelParams | None = None
    table_n: tuple = field(default=())
    table_psi: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("sqrt", "power", "table"):
            raise ValueError(f"unknown scale kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("iterate level k must be >= 1")
        if self.kind == "table":
            if len(self.table_n) < 2 or len(self.table_n) != len(self.table_psi):
                raise ValueError("table scale needs matching n/psi tables of length >= 2")
            if np.any(np.diff(self.table_n) <= 0):
                raise ValueError("table_n must be strictly increasing")

    @classmethod
    def from_samples(cls, ns, values, **kw) -> "ScaleFunction":
        return cls(kind="table", table_n=tuple(map(float, ns)), table_psi=tuple(map(float, values)), **kw)

    def __call__(self, n):
        if self.kind == "sqrt":
            return np.sqrt(n)
        if self.kind == "power":
            return np.power(n, self.p)
        logn = np.log(np.asarray(self.table_n))
        logpsi = np.log(np.asarray(self.table_psi))
        return np.exp(np.interp(np.log(n), logn, logpsi))

    def _require_params(self) -> ModelParams:
        if self.params is None:
            raise ValueError("derived scales need ModelParams")
        return self.params

    def phi(self, n) -> float:
        return iterated_log(self.k - 1, n)

    def cylinder_radius(self, n, level: int) -> float:
        """Transverse radius of the level-``level`` cylinder of longitudinal half width psi(n)."""
        eta = self._require_params().eta
        return math.sqrt(n * self(n)) / iterated_log(level, n) ** eta

    def u(self, n) -> float:
        pr = self._require_params()
        return math.sqrt(n * self(n)) / self.phi(n) ** pr.eta

    def v(self, n) -> float:
        pr = self._require_params()
        return math.sqrt(n * self(n)) * math.log(self.phi(n)) ** pr.beta

    def w(self, n) -> float:
        pr = self._require_params()
        return n / self.phi(n) ** pr.gamma

    def u_star(self, n) -> float:
        pr = self._require_params()
        return math.sqrt(n * self(n)) / math.log(self.phi(n)) ** pr.eta

    def v_star(self, n) -> float:
        pr = self._require_params()
        return math.sqrt(n * self(n)) * math.log(math.log(self.phi(n))) ** pr.beta

    def w_star(self, n) -> float:
        pr = self._require_params()
        return n / math.log(self.phi(n)) ** pr.gamma

    def derived(self, n) -> "DerivedScales":
        return DerivedScales(
            n=float(n),
            u=self.u(n),
            v=self.v(n),
            w=self.w(n),
            u_star=self.u_star(n),
            v_star=self.v_star(n),
            w_star=self.w_star(n),
        )

    def slab_levels(self, n, count: int) -> np.ndarray:
        """``count`` evenly spaced slab positions in ``[w(n), n - w(n)]``."""
        lo = self.w(n)
        hi = n - lo
        if count <= 0 or hi < lo:
            return np.empty(0)
        if count == 1:
            return np.array([n / 2])
        return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class DerivedScales:
    n: float
    u: float
    v: float
    w: float
    u_star: float
    v_star: float
    w_star: float


@dataclass
class ScaleReport:
    increasing: bool
    lower_ok: bool
    D: float
    worst_lower: tuple | None
    checked: int

    @property
    def passed(self) -> bool:
        return self.increasing and self.lower_ok


def check_scale_assumption(psi: ScaleFunction, params: ModelParams, n_grid, c_grid, rtol: float = 1e-12) -> ScaleReport:
    """Check the two-sided regularity sandwich for ``psi`` on a grid.

    ``psi(n)/c**(1-k3) <= psi(n/c)`` is tested pass/fail; the smallest ``D >= 1``
    with ``psi(n/c) <= D psi(n)/c**k3`` is reported.  Pairs with
    ``c > sqrt(n)`` or ``c < 1`` are outside the assumption and skipped.
    """
    k3 = params.kappa3
    ns = np.asarray(sorted(n_grid), dtype=float)
    vals = np.asarray([psi(n) for n in ns])
    increasing = bool(np.all(np.diff(vals) > 0)) if len(ns) > 1 else True
    D = 1.0
    lower_ok = True
    worst = None
    worst_gap = -math.inf
    checked = 0
    for n in ns:
        pn = float(psi(n))
        for c in c_grid:
            if c < 1 or c > math.sqrt(n):
                continue
            checked += 1
            pnc = float(psi(n / c))
            gap = pn / c ** (1 - k3) - pnc
            if gap > rtol * pn:
                lower_ok = False
            if gap > worst_gap:
                worst_gap, worst = gap, (float(n), float(c))
            D = max(D, pnc * c**k3 / pn)
    return ScaleReport(increasing, lower_ok, D, worst if not lower_ok else None, checked)
