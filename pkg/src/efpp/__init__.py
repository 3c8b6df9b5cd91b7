"""Euclidean first-passage percolation on Poisson samples: exact geodesics and estimators."""

__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig
from .geodesic import Geodesic, geodesic, passage_times, path_time
from .geometry import ModelParams, derive_constants
from .poisson import PoissonSample, SeedPolicy, sample_poisson
from .scales import ScaleFunction

__all__ = [
    "ConfigError", "ExperimentConfig", "Geodesic", "ModelParams", "PoissonSample",
    "ScaleFunction", "SeedPolicy", "derive_constants", "geodesic", "passage_times",
    "path_time", "sample_poisson",
]
