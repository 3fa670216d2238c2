"""Exception types. Every error carries a stable ``code`` string."""


class QNashError(Exception):
    code = "ERROR"


class ValidationError(QNashError, ValueError):
    """Invalid input. ``field`` is a dotted/indexed path to the offending field."""

    code = "VALIDATION_ERROR"

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class ParseError(QNashError, ValueError):
    code = "PARSE_ERROR"


class NormMismatch(QNashError, ValueError):
    code = "NORM_MISMATCH"


class BasisMismatch(QNashError, ValueError):
    code = "BASIS_MISMATCH"


class IndexOutOfRange(QNashError, IndexError):
    code = "INDEX_OUT_OF_RANGE"


class NotUnitary(QNashError, ValueError):
    code = "NOT_UNITARY"


class DimensionMismatch(QNashError, ValueError):
    code = "DIMENSION_MISMATCH"


class NotBimatrix(QNashError, ValueError):
    code = "NOT_BIMATRIX"


class DomainError(QNashError, ValueError):
    code = "DOMAIN_ERROR"


class NoInteriorSolution(QNashError, RuntimeError):
    code = "NO_INTERIOR_SOLUTION"

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class BeliefMismatch(QNashError, ValueError):
    code = "BELIEF_MISMATCH"


class InfeasibleBudget(QNashError, ValueError):
    code = "INFEASIBLE_BUDGET"


class ArbitrageError(InfeasibleBudget):
    """A zero-payoff security quoted at a nonzero price."""


class NoInteriorOptimum(QNashError, RuntimeError):
    code = "NO_INTERIOR_OPTIMUM"

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class PreconditionViolation(QNashError, ValueError):
    code = "PRECONDITION_VIOLATION"
