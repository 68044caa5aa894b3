"""
Centralized error handling and logging
"""
import time
from typing import Any, Dict, Optional

from pydantic import ValidationError

from gradcode.logging_config import get_logger

logger = get_logger("error_handling")

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2
EXIT_INTERNAL_ERROR = 70


class GradCodeError(Exception):
    """Base gradcode exception"""
    def __init__(self, message: str, exit_code: int = EXIT_DOMAIN_ERROR, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class InvalidArgumentError(GradCodeError):
    """Argument outside an operation's precondition"""
    pass


class DomainError(GradCodeError):
    """Parameter outside the mathematical domain of a formula"""
    pass


class UndefinedMetricError(GradCodeError):
    """Metric undefined for the given input"""
    pass


class MatrixFormatError(InvalidArgumentError):
    """Malformed triplet matrix file"""
    pass


class UsageError(GradCodeError):
    """Command-line usage error"""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_USAGE_ERROR, details=details)


def handle_exception(exc: BaseException) -> int:
    """Log an exception escaping a subcommand and map it to an exit code"""
    if isinstance(exc, GradCodeError):
        logger.error(exc.message, error_type=type(exc).__name__, details=exc.details)
        return exc.exit_code

    if isinstance(exc, ValidationError):
        logger.error("validation error", errors=exc.errors(include_url=False))
        return EXIT_DOMAIN_ERROR

    error_id = f"ERR_{int(time.time())}"
    logger.error("unexpected error", error_id=error_id, error=str(exc), exc_info=exc)
    return EXIT_INTERNAL_ERROR


def describe(exc: BaseException) -> str:
    """One-line user-facing message for an exception"""
    if isinstance(exc, GradCodeError):
        return exc.message
    if isinstance(exc, ValidationError):
        first = exc.errors(include_url=False)[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        return f"{location}: {first['msg']}" if location else str(first["msg"])
    return f"internal error: {exc}"
