"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numeric argument is outside the operation's admissible domain."""


class DimensionError(DomainError):
    """A matrix or vector has the wrong shape for the requested operation."""


class UnsupportedDomainError(DomainError):
    """The (distribution, argument) combination has no supported evaluation path."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the final off-diagonal residual so callers can report how far
    the iteration got.
    """

    def __init__(self, message: str, offdiag_residual: float):
        super().__init__(message)
        self.offdiag_residual = offdiag_residual
