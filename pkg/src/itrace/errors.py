"""Exception types raised by the solvers and their building blocks."""


class ItraceError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteObjective(ItraceError):
    pass


class NonFiniteGradient(ItraceError):
    pass


class NonFiniteHessVec(ItraceError):
    pass


class UnknownProblem(ItraceError, KeyError):
    pass


class DimensionError(ItraceError, ValueError):
    pass


class NotPositiveDefinite(ItraceError):
    """A shifted matrix expected to be positive definite was not."""


class InvalidGradientNorm(ItraceError, ValueError):
    pass


class SubproblemStall(ItraceError):
    """An iterative subproblem solve hit its iteration cap."""


class BracketError(ItraceError):
    pass


class ZeroGradient(ItraceError, ValueError):
    pass


class BreakdownExpand(ItraceError):
    """Attempted to grow a Krylov subspace that is already invariant."""


class InternalInvariantViolation(ItraceError):
    pass


class DegenerateStep(ItraceError):
    pass


class FdsStall(ItraceError):
    pass


class ProblemTooLarge(ItraceError):
    pass


class EmptyComparison(ItraceError):
    pass


class IoError(ItraceError, OSError):
    """Reading or writing a benchmark file failed."""
