"""Exception types shared across the package."""


class SeetoError(Exception):
    """Base class for errors raised by this package."""


class UsageError(SeetoError, ValueError):
    """An argument violated a documented precondition."""


class DegenerateStateError(SeetoError, ValueError):
    """Task state frames are constant or non-finite and cannot be embedded."""


class InsufficientDataError(SeetoError, ValueError):
    """Too few (distinct) training points for the requested model."""


class SurrogateTrainingError(SeetoError, RuntimeError):
    """Surrogate fitting failed after all numerical retries."""


class EvaluationError(SeetoError, RuntimeError):
    """A true objective evaluation raised; carries whatever was completed."""

    def __init__(self, message, partial_trajectory=None):
        super().__init__(message)
        self.partial_trajectory = partial_trajectory


class ArchiveVersionError(SeetoError, ValueError):
    """Archive file written with an unsupported format version."""


class ArchiveCorruptionError(SeetoError, ValueError):
    """Archive file failed checksum or structural validation."""


class ConfigError(SeetoError, ValueError):
    """Experiment configuration failed schema or semantic validation."""
