"""Exception hierarchy shared by every kicstat module."""


class KicError(Exception):
    """Base class for all kicstat failures."""

    exit_code = 3


class ResourceError(KicError):
    """A requested enumeration or allocation exceeds the configured budget."""

    exit_code = 2


class ConsistencyError(KicError):
    """Two independent routes to the same quantity disagree."""

    exit_code = 1


class InvariantError(KicError):
    """A structural invariant (unitarity, symmetry, dimension) was violated."""

    exit_code = 1


class NumericalError(KicError):
    """A numerical procedure failed to reach its accuracy target.

    ``worst`` carries the offending residual or deviation when one is known.
    """

    exit_code = 3

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class EstimationError(KicError):
    """A statistical estimator could not produce a value from its input."""

    exit_code = 3


class CacheMissingError(KicError):
    exit_code = 2
