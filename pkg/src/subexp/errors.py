"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ContractViolationError(ValueError):
    """An input object is not in canonical form (e.g. a non-normalized ScaledSum)."""


class QuadratureError(RuntimeError):
    """Adaptive integration failed to converge within the depth budget.

    Carries the partial log-integral and a log-scale error bound so callers
    can still report a bracketed value.
    """

    def __init__(self, message, partial_log, bound_log):
        super().__init__(message)
        self.partial_log = partial_log
        self.bound_log = bound_log


class DivergentMomentError(ArithmeticError):
    """An exponential moment is infinite (or overflows any float representation)."""

    def __init__(self, message, gamma):
        super().__init__(message)
        self.gamma = gamma


class ProbePreconditionError(ValueError):
    """A probe's input distribution fails the probe's applicability check."""
