"""Exception types shared across the package."""


class SkmtlError(Exception):
    """Base class for all package-specific errors."""


class InvalidInput(SkmtlError, ValueError):
    """An argument violates a documented precondition (shape, range, finiteness)."""


class NotPSD(SkmtlError, ValueError):
    """A matrix required to be positive semidefinite has a significantly negative eigenvalue."""


class NotInvertible(SkmtlError, ValueError):
    """A matrix required to be invertible is singular to working precision."""


class ZeroVariance(SkmtlError, ValueError):
    """A task has zero output variance, so a variance-normalized score is undefined."""


class RefusedTooLarge(SkmtlError, ValueError):
    """A deliberately small-scale reference routine was called on a problem too large for it."""


class ParseError(SkmtlError, ValueError):
    """A data file is malformed.  Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class Diverged(SkmtlError, RuntimeError):
    """An iterative solver produced non-finite values."""
