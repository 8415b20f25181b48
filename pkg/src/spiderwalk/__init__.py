"""Random walks, Brownian motion and their local/occupation times on spider graphs."""
from .analytic import SkewParams
from .experiments import ConfigError, ExperimentConfig, ExperimentReport, run_experiment
from .randkit import SeedSpec, derive_stream, make_rng
from .spider import SpiderConfig, SpiderPath, SpiderPoint
from .stats import TestResult

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "SeedSpec",
    "SkewParams",
    "SpiderConfig",
    "SpiderPath",
    "SpiderPoint",
    "TestResult",
    "derive_stream",
    "make_rng",
    "run_experiment",
]
