"""
app/errors.py

Exception types shared by the simulator stages, the configuration layer and the CLI.
"""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error the simulator raises on purpose."""


class ConfigError(SimulationError):
    """Anything wrong with an experiment configuration. Maps to CLI exit code 1."""


class ConfigParseError(ConfigError):
    """The configuration file could not be read or is not valid YAML."""


class ConfigSchemaError(ConfigError):
    """
    The configuration does not match the schema.

    Attributes:
        key: Dotted path of the first offending key, when known
    """

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class PhysicalValueError(ConfigError):
    """The configuration is well formed but describes an unrealizable simulation."""


class StageError(SimulationError):
    """
    A pipeline stage failed. Maps to CLI exit code 2.

    Attributes:
        stage: Name of the stage that failed
        cause: The original exception
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class BandwidthError(ValueError):
    """A decimation would discard more signal energy than allowed."""


class PolarizationError(ValueError):
    """Input fields are not in the polarization states the receiver model assumes."""


class NoPeakError(ValueError):
    """An image cut has no peak that rises above its floor."""
