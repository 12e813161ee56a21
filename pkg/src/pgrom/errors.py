"""Exception hierarchy shared by every subpackage."""


class PgromError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(PgromError, ValueError):
    """Inputs violate a documented shape or domain contract."""


class NumericalFailure(PgromError, ArithmeticError):
    """A computation produced non-finite values."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConfigurationError(PgromError, ValueError):
    pass


class SolverError(PgromError):
    pass


class LinearSolveError(SolverError):
    """The (reduced) linear system could not be solved."""


class NonConvergenceError(SolverError):
    """Iteration cap reached before the convergence test passed."""

    def __init__(self, message, residual_norm=float("nan"), iterations=0):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class StepFailure(SolverError):
    """A time step could not be completed.

    Carries the final residual norm and the time at which the step was
    attempted so that callers can classify the trajectory as unstable.
    """

    def __init__(self, message, t=float("nan"), residual_norm=float("nan")):
        super().__init__(message)
        self.t = t
        self.residual_norm = residual_norm


class StrategyError(PgromError, ValueError):
    pass


class DegenerateBasisError(PgromError, ValueError):
    pass


class InapplicableError(PgromError, ValueError):
    pass


class FormatError(PgromError, IOError):
    pass


class PipelineError(PgromError):
    pass


class SampleCorruptionError(PgromError, ValueError):
    pass
