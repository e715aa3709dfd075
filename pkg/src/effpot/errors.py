"""Exception hierarchy shared by all effpot modules."""


class EffpotError(Exception):
    """Base class for every error raised by effpot."""


class ModelError(EffpotError, ValueError):
    """The subshift description is unusable."""


class NonSymmetricError(ModelError):
    pass


class ReducibleError(ModelError):
    pass


class BadLambdaError(ModelError):
    pass


class DepthTooLargeError(EffpotError, ValueError):
    pass


class DepthMismatchError(EffpotError, ValueError):
    pass


class MissingEntryError(EffpotError, ValueError):
    pass


class NonFiniteError(EffpotError, ValueError):
    pass


class NoConvergenceError(EffpotError, RuntimeError):
    """An iterative solver stopped at ``max_iter`` without meeting its tolerance.

    Attributes
    ----------
    residual : float
        Last residual observed.
    partial : object or None
        Best available partial result (solver specific).
    """

    def __init__(self, message, residual=float("nan"), partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial


class InsufficientRowsError(EffpotError, ValueError):
    pass


class NotStronglyConnectedError(EffpotError, ValueError):
    pass


class WrongCError(EffpotError, ValueError):
    pass


class InfeasibleError(EffpotError, RuntimeError):
    pass


class UnboundedError(EffpotError, RuntimeError):
    pass


class VerificationError(EffpotError, AssertionError):
    """A numerical identity check failed; ``report`` holds every value involved."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigParseError(EffpotError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(EffpotError, ValueError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason
