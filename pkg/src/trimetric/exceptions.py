"""Exception hierarchy shared by every trimetric module."""


class TrimetricError(Exception):
    """Base class for all errors raised by this package."""


class MalformedBlob(TrimetricError, ValueError):
    pass


class MalformedArtifact(TrimetricError, ValueError):
    pass


class DimensionMismatch(TrimetricError, ValueError):
    pass


class NonFiniteResult(TrimetricError, ArithmeticError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class EmptyArtifact(TrimetricError, ValueError):
    pass


class DegenerateInputSpace(TrimetricError, ValueError):
    pass


class DomainEscape(TrimetricError, ArithmeticError):
    pass


class IndexOutOfRange(TrimetricError, IndexError):
    pass


class EmptyBrSet(TrimetricError, ValueError):
    pass


class UnsupportedGame(TrimetricError, ValueError):
    pass


class NotAnEquilibrium(TrimetricError, ValueError):
    pass


class EmptyCohort(TrimetricError, ValueError):
    pass


class InvalidWeights(TrimetricError, ValueError):
    pass


class NotNormalized(TrimetricError, ValueError):
    pass


class ConfigError(TrimetricError, ValueError):
    """Invalid run configuration or CLI usage (exit code 2)."""
