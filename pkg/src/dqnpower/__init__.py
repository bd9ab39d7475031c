"""Learned transmit-power control for a secondary user sharing spectrum with a primary user."""

from .errors import (CheckpointError, ConfigError, InfeasibleScenarioError,
                     InvalidMeasurementError, TrainingDivergedError)
from .radio import PowerControlEnv, PowerPair, RadioScenario, build_scenario

__version__ = "0.1.0"

__all__ = [
    "CheckpointError", "ConfigError", "InfeasibleScenarioError", "InvalidMeasurementError",
    "TrainingDivergedError", "PowerControlEnv", "PowerPair", "RadioScenario", "build_scenario",
]
