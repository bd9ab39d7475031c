class DqnPowerError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(DqnPowerError, ValueError):
    pass


class InfeasibleScenarioError(DqnPowerError):
    """No power pair satisfies both SINR thresholds."""


class InvalidMeasurementError(DqnPowerError, ValueError):
    """A power update was asked to divide by a zero SINR."""


class CheckpointError(DqnPowerError):
    pass


class TrainingDivergedError(DqnPowerError, FloatingPointError):
    pass
