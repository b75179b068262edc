"""
Exceptions raised by the library.

Two families: ValidationError for bad inputs (files, shapes, flags) and
NumericalFailure for arithmetic trouble (overflow, Cholesky breakdown, ...).
The CLI maps them to exit codes 2 and 3.
"""

from typing import Any, Optional


class ValidationError(ValueError):
    """Invalid input, shape or configuration"""


class DimensionMismatch(ValidationError):
    pass


class TooLargeError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class CmatFormatError(ValidationError):
    """Malformed CMAT file; carries the offending 1-based line number"""

    def __init__(self, message: str, line: int, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: {message}")


class NumericalFailure(ArithmeticError):
    """Arithmetic failure inside an emulated or exact computation"""


class LowPrecisionOverflow(NumericalFailure):
    pass


class DomainError(NumericalFailure):
    """Square root of a negative number or division by zero"""


class CholeskyBreakdown(DomainError):
    def __init__(self, column: int, pivot: float):
        self.column = column
        self.pivot = pivot
        super().__init__(f"Cholesky breakdown at column {column}: pivot {pivot!r} is not positive")


class SolveBreakdown(DomainError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Zero diagonal entry {index} in triangular solve")


class RankDeficientError(NumericalFailure):
    def __init__(self, rank: int, size: int):
        self.rank = rank
        self.size = size
        super().__init__(f"Matrix is numerically rank deficient (rank {rank} of {size})")


class NoConvergenceError(NumericalFailure):
    """Iteration limit reached; `result` holds the best iterate"""

    def __init__(self, message: str, result: Any = None):
        self.result = result
        super().__init__(message)


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def exit_code_for(error: BaseException) -> int:
    """Process exit code for an exception escaping a workflow"""
    if isinstance(error, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(error, (ValueError, OSError)):
        return EXIT_VALIDATION
    return 1
