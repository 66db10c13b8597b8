"""Exception hierarchy shared by all modules."""


class ChainrecError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(ChainrecError, ValueError):
    """Malformed input: configs, parameters, user-defined maps."""


class DomainError(ValidationError):
    """A point or axis range that does not fit the domain."""


class SizeError(ValidationError):
    """Requested grid exceeds the box-count cap."""


class AnalysisError(ChainrecError, RuntimeError):
    """An analysis could not be carried out on valid input."""


class PreconditionError(AnalysisError):
    """An operation was called outside its documented precondition."""


class TrackingError(AnalysisError):
    """Per-depth component profiles do not follow one attractor."""


class UnsupportedSystemError(AnalysisError):
    """The requested operation is not available for this system."""
