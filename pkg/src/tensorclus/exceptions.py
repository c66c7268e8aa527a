"""Exception types shared across the package."""


class TensorClusError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(TensorClusError, ValueError):
    """Operand shapes do not conform for the requested operation."""


class InvalidModeError(TensorClusError, ValueError):
    """A mode index is outside the tensor's order."""


class RankDeficiencyError(TensorClusError, ValueError):
    """A matrix that must have full column rank is numerically singular."""


class NumericalError(TensorClusError, RuntimeError):
    """A computation produced non-finite values."""


class ConfigError(TensorClusError, ValueError):
    """A run configuration failed validation."""


class DataFormatError(TensorClusError, ValueError):
    """A dataset file is malformed or inconsistent."""
