import traceback
from typing import Dict, Any, Optional

import config
from utils.logger import logger

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_ERROR = 3


class BorpsError(Exception):
    """Base class for every error raised by the engine."""


class DomainError(BorpsError, ValueError):
    """A parameter lies outside its mathematical domain."""


class InputValidationError(BorpsError, ValueError):
    """Dataset, file or flag input that cannot be used as given."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column

    def __str__(self):
        where = []
        if self.row is not None:
            where.append(f"row {self.row}")
        if self.column is not None:
            where.append(f"column {self.column!r}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


class NumericError(BorpsError, ArithmeticError):
    """A numerical routine failed; `diagnostics` carries what was tried."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SamplerInvariantError(NumericError):
    """The chain state broke an invariant the update rules should preserve."""


class DegenerateScaleError(NumericError):
    """The identifying scale δ_{C-1} is too close to zero to divide by."""


class OptimizationError(NumericError):
    """The baseline solver did not converge."""


def exit_code_for(error: Exception) -> int:
    if isinstance(error, (InputValidationError, DomainError)):
        return EXIT_INPUT_ERROR
    if isinstance(error, NumericError):
        return EXIT_NUMERIC_ERROR
    return 1


def format_error_response(error: Exception) -> Dict[str, Any]:
    """
    Format an error as a standard command response.

    Args:
        error: The exception to format

    Returns:
        Dict: A standardized error response
    """
    error_detail = str(error)
    logger.error(f"Error: {error_detail}")

    response = {
        "success": False,
        "error": error_detail,
        "error_type": type(error).__name__,
        "exit_code": exit_code_for(error),
    }
    if isinstance(error, NumericError) and error.diagnostics:
        response["diagnostics"] = error.diagnostics

    # Include traceback in debug mode
    if config.DEBUG:
        response["traceback"] = traceback.format_exc()

    return response


def handle_exception(error: Exception) -> Dict[str, Any]:
    """
    Handle an exception raised inside a command and return an error response.

    Errors outside the BorpsError hierarchy are unexpected; they are re-raised
    so the interpreter reports them.
    """
    if not isinstance(error, BorpsError):
        raise error

    logger.error(f"Exception: {str(error)}")
    if config.DEBUG:
        logger.error(traceback.format_exc())

    return format_error_response(error)
