"""Reproducible experiment runners and the ``reskit`` command line."""

from .config import (CONFIG_TYPES, ConvergenceConfig, PredictConfig, RecDirectConfig,
                     SimulateKsConfig, StabilityConfig, TimingConfig, config_hash,
                     load_config)
from .registry import EXPERIMENTS

__all__ = [
    "CONFIG_TYPES", "EXPERIMENTS", "load_config", "config_hash",
    "ConvergenceConfig", "PredictConfig", "StabilityConfig", "TimingConfig",
    "RecDirectConfig", "SimulateKsConfig",
]
