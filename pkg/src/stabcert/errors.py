class StabCertError(Exception):
    """Base class for all errors raised by stabcert."""


class NotSPD(StabCertError):
    """Matrix is not symmetric positive definite."""


class SingularLyapunov(StabCertError):
    """Lyapunov equation could not be solved to the required residual."""


class Infeasible(StabCertError):
    """Linear program has an empty feasible set."""


class ExpressionSyntaxError(StabCertError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownParameter(StabCertError, ValueError):
    pass


class NonFinite(StabCertError, ArithmeticError):
    pass


class NotInAffineHull(StabCertError):
    pass


class DegenerateSimplex(StabCertError):
    pass


class OutsideSimplex(StabCertError):
    pass


class InsideSimplex(StabCertError):
    pass


class UnsupportedTheta(StabCertError):
    """Parameter functions cannot be enclosed automatically."""


class BudgetExhausted(StabCertError):
    """Evaluation budget ran out; ``partial`` holds the (still valid) result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class OutsideCover(StabCertError):
    pass


class MissingVInner(StabCertError):
    pass


class NotSymmetric(StabCertError):
    pass
