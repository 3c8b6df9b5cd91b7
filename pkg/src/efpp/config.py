"""Experiment configuration and the sample-box padding policies."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import BoxRegion, ModelParams, derive_constants, rotation_to
from .scales import ScaleFunction

PADDING_POLICIES = ("compact", "wide")
# fields that do not change any computed record
_NON_SCIENTIFIC = ("output_dir",)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    alpha: float = 1.5
    psi_kind: str = "sqrt"
    psi_power: float = 0.5
    kappa3: float = 0.4
    k: int = 2
    n_grid: tuple = (16, 32, 64)
    replicates: int = 100
    master_seed: int = 0
    intensity: float = 1.0
    padding_policy: str = "compact"
    lambda_count: int = 5
    grid_resolution: int = 2
    direction: tuple | None = None
    output_dir: str = "efpp-out"

    def __post_init__(self):
        try:
            derive_constants(self.d, self.alpha, self.kappa3)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 2 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be a strictly increasing list of integers >= 2")
        object.__setattr__(self, "n_grid", grid)
        if self.replicates < 1:
            raise ConfigError("replicates must be positive")
        if self.padding_policy not in PADDING_POLICIES:
            raise ConfigError(f"padding_policy must be one of {PADDING_POLICIES}")
        if self.psi_kind not in ("sqrt", "power"):
            raise ConfigError("psi_kind must be 'sqrt' or 'power'")
        if self.intensity <= 0:
            raise ConfigError("intensity must be positive")
        if self.k < 1 or self.lambda_count < 0 or self.grid_resolution < 0:
            raise ConfigError("k >= 1, lambda_count >= 0, grid_resolution >= 0 required")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.direction is not None:
            u = np.asarray(self.direction, dtype=float)
            if u.shape != (self.d,) or not np.isfinite(u).all() or np.linalg.norm(u) == 0:
                raise ConfigError("direction must be a non-zero vector of length d")
            norm = np.linalg.norm(u)
            # already-unit vectors are kept as given so a JSON round trip is exact
            if abs(norm - 1.0) > 4 * np.finfo(float).eps:
                u = u / norm
            object.__setattr__(self, "direction", tuple(float(v) for v in u))

    @property
    def params(self) -> ModelParams:
        return derive_constants(self.d, self.alpha, self.kappa3)

    @property
    def psi(self) -> ScaleFunction:
        kind = "sqrt" if self.psi_kind == "sqrt" else "power"
        return ScaleFunction(kind=kind, p=self.psi_power, k=self.k, params=self.params)

    @property
    def unit(self) -> np.ndarray:
        if self.direction is None:
            e = np.zeros(self.d)
            e[0] = 1.0
            return e
        return np.asarray(self.direction, dtype=float)

    def endpoint(self, n: float) -> np.ndarray:
        return n * self.unit

    def transverse_half_width(self, n: float) -> float:
        psi_root = float(self.psi(n)) ** (1.0 / self.alpha)
        if self.padding_policy == "wide":
            return max(8 * n**0.75 * (1 + math.log(n)), 4 * psi_root)
        return max(n**0.75, 4 * psi_root)

    def box(self, n: float) -> BoxRegion:
        """Axis-aligned box holding the padded cylinder around ``[0, n u]``."""
        lo = np.concatenate([[-0.25 * n], np.full(self.d - 1, -self.transverse_half_width(n))])
        hi = np.concatenate([[1.25 * n], np.full(self.d - 1, self.transverse_half_width(n))])
        if self.direction is None:
            return BoxRegion.from_bounds(lo, hi)
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(self.d, -1).T
        rotated = rotation_to(self.unit)(corners)
        return BoxRegion.from_bounds(rotated.min(axis=0), rotated.max(axis=0))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["n_grid"] = list(self.n_grid)
        if self.direction is not None:
            out["direction"] = list(self.direction)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        core = {k: v for k, v in self.to_dict().items() if k not in _NON_SCIENTIFIC}
        blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        obj = dict(obj)
        if "n_grid" in obj:
            obj["n_grid"] = tuple(obj["n_grid"])
        if obj.get("direction") is not None:
            obj["direction"] = tuple(obj["direction"])
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)
