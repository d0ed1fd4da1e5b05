"""Exception hierarchy.

Every error carries a short ``code`` string and an ``exit_code`` used by the
command line tool: 2 for input/parse problems, 3 for numerical failures and
4 for violated preconditions.
"""


class ZerolossError(Exception):
    code = "ERROR"
    exit_code = 4


class ParseError(ZerolossError):
    code = "PARSE_ERROR"
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateNError(ParseError):
    code = "DUPLICATE_N"


class RangeError(ParseError):
    code = "RANGE_ERROR"


class NumericalError(ZerolossError):
    exit_code = 3


class QuadratureFailure(NumericalError):
    code = "QUADRATURE_FAILURE"


class NoSolution(NumericalError):
    code = "NO_SOLUTION"


class UpdateBudgetExceeded(NumericalError):
    code = "UPDATE_BUDGET_EXCEEDED"

    def __init__(self, message, weights=None, updates=0):
        super().__init__(message)
        self.weights = weights
        self.updates = updates


class PreconditionError(ZerolossError, ValueError):
    exit_code = 4


class UnsupportedPoint(PreconditionError):
    code = "UNSUPPORTED_POINT"


class InvalidDegree(PreconditionError):
    code = "INVALID_DEGREE"


class InvalidCount(PreconditionError):
    code = "INVALID_COUNT"


class EmptyTrainingSet(PreconditionError):
    code = "EMPTY_TRAINING_SET"


class NoRecords(PreconditionError):
    code = "NO_RECORDS"


class IndexOutOfRange(PreconditionError, IndexError):
    code = "INDEX_OUT_OF_RANGE"


class EmptyMinimaSet(PreconditionError):
    code = "EMPTY_MINIMA_SET"


class BudgetExceeded(PreconditionError):
    code = "BUDGET_EXCEEDED"


class InvalidSplit(PreconditionError):
    code = "INVALID_SPLIT"


class InsufficientData(PreconditionError):
    code = "INSUFFICIENT_DATA"


class Degenerate(PreconditionError):
    code = "DEGENERATE"
