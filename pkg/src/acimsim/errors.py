"""Exception hierarchy shared by every module."""


class AcimError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AcimError):
    """Operands have incompatible or invalid shapes."""


class DomainError(AcimError):
    """A value lies outside the mathematically valid domain of an operation."""


class ConfigError(AcimError):
    """A configuration is inconsistent or cannot be parsed."""


class DataError(AcimError):
    """Input data is malformed or cannot be loaded."""


class CheckpointError(AcimError):
    """A checkpoint file is missing, corrupt, or incompatible."""


class TrainingError(AcimError):
    """Training failed (for example the loss diverged)."""
