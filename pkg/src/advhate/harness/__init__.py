"""Config-driven experiment runner."""

from .config import DEFAULTS, SPLITS, ExperimentConfig, derive_seed
from .pipeline import (CONDITIONS, PreparedData, compare_models, deterministic_view,
                       emit_curves, prepare_data, run_experiment)

__all__ = [
    "CONDITIONS", "DEFAULTS", "SPLITS", "ExperimentConfig", "PreparedData", "compare_models",
    "derive_seed", "deterministic_view", "emit_curves", "prepare_data", "run_experiment",
]
