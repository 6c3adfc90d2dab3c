from fastapi import HTTPException, status


class TsgdError(Exception):
    """Base class for every error raised by the library."""

    default_detail = "Optimization library error"

    def __init__(self, detail: str | None = None):
        self.detail = detail or self.default_detail
        super().__init__(self.detail)


class InvalidInputError(TsgdError):
    default_detail = "Invalid input"


class DimensionMismatchError(InvalidInputError):
    default_detail = "Dimension mismatch"


class NonFiniteError(InvalidInputError):
    default_detail = "Non-finite value encountered"


class PreconditionError(InvalidInputError):
    default_detail = "Precondition violated"


class PartitionError(InvalidInputError):
    default_detail = "Batches do not partition the sample index set"


class InsufficientDataError(InvalidInputError):
    default_detail = "Not enough data points"


class LibsvmParseError(InvalidInputError):
    def __init__(self, detail: str = "Malformed LIBSVM input", line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            detail = f"line {line_number}: {detail}"
        super().__init__(detail)


class NonConvergentBudgetError(TsgdError):
    default_detail = "Reference run still decreasing at the end of its budget"


class AcceptanceCheckError(TsgdError):
    default_detail = "Acceptance check failed"


class BadRequestException(HTTPException):
    def __init__(self, detail: str = "Bad request"):
        super().__init__(status_code=status.HTTP_400_BAD_REQUEST, detail=detail)


class ConflictException(HTTPException):
    def __init__(self, detail: str = "Request conflicts with the problem state"):
        super().__init__(status_code=status.HTTP_409_CONFLICT, detail=detail)
