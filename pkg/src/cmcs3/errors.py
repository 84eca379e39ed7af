# Exception types shared across the library.  Keeping them in one place lets
# callers (and the CLI) distinguish "you called this wrong" from "the numerics
# gave up" without string matching.


class CMCError(Exception):
    """Base class for all library errors."""


class DomainError(CMCError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. a pole)."""


class PreconditionError(CMCError, ValueError):
    """A documented precondition was violated."""


class ConvergenceError(CMCError, RuntimeError):
    """An iterative procedure failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConditioningError(CMCError, RuntimeError):
    """A linear-algebra step lost positive definiteness or became singular."""


class InconsistencyError(CMCError, RuntimeError):
    """A structural identity that should hold failed beyond tolerance."""
