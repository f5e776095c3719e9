"""Exception types shared across the package."""


class EquideformError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EquideformError):
    """An input left its admissible domain (radius, weight, parameter)."""


class ShapeError(EquideformError):
    """An array argument has the wrong length or shape."""


class UnsupportedError(EquideformError):
    """The operation is not defined for this instance or grid kind."""


class PreconditionError(EquideformError):
    """A documented precondition was violated by the caller."""


class NoConvergence(EquideformError):
    """An iteration failed to meet its tolerance within the allowed budget.

    When raised by branch continuation, ``partial_branch`` holds the records
    accepted before the failure.
    """

    def __init__(self, message, partial_branch=None):
        super().__init__(message)
        self.partial_branch = partial_branch


class IllConditioned(EquideformError):
    """A linear solve was abandoned because the matrix is too ill conditioned."""


class ConfigError(EquideformError):
    """A configuration file could not be parsed or validated."""
