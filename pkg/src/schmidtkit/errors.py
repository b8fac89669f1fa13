"""Exception types shared across the package."""


class SchmidtkitError(Exception):
    """Base class for all package errors."""


class InvalidStateError(SchmidtkitError):
    """A state, operator, or decomposition violates a construction invariant.

    The message names the violated invariant and the magnitude of the
    violation so that file parsers can surface a useful diagnostic.
    """


class DimensionMismatchError(SchmidtkitError):
    """Operands live on incompatible tensor-product spaces."""


class InputFormatError(SchmidtkitError):
    """A state/operation document could not be parsed."""


class AnnihilationError(SchmidtkitError):
    """A (projective) operation mapped the state to (numerically) zero."""


class ClassTagError(SchmidtkitError):
    """An operation does not satisfy the invariants of its declared class."""


class IllConditionedError(SchmidtkitError):
    """A local factor is too close to singular to invert reliably."""


class RankError(SchmidtkitError):
    """A Schmidt-rank precondition failed (e.g. ensemble member exceeds generator rank)."""


class ConvergenceError(SchmidtkitError):
    """No solver restart reached the residual tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class IncompleteBasisError(SchmidtkitError):
    """The discovered stationary set could not reconstruct the target state.

    Carries the partial quasi-probability result so callers can inspect
    restart statistics and the achieved residual.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
