"""
Logging configuration module with error accounting
"""

import sys
import traceback
from pathlib import Path
from typing import Any

from loguru import logger

from .config import Config
from .errors import UdiKitError


class ErrorHandler:
    """Counts and logs failures raised while running stages"""

    def __init__(self):
        self.error_counts: dict[str, int] = {}
        self.warning_counts: dict[str, int] = {}

    def log_error(
        self,
        error: Exception,
        context: str = "",
        extra_data: dict[str, Any] | None = None,
        level: str = "ERROR",
    ) -> int:
        """
        Log error with context and return the exit code it maps to

        Args:
            error: Exception object
            context: Stage or operation in which the error occurred
            extra_data: Additional data logged at debug level
            level: Log level for the message; callers that report to the user themselves pass DEBUG

        Returns:
            Process exit code for the error
        """
        error_type = type(error).__name__
        self.error_counts[error_type] = self.error_counts.get(error_type, 0) + 1

        error_msg = f"[{error_type}] {error!s}"
        if context:
            error_msg = f"{context}: {error_msg}"
        logger.log(level, error_msg)
        logger.debug(f"Stack trace:\n{traceback.format_exc()}")

        if extra_data:
            logger.debug(f"Extra data: {extra_data}")

        if isinstance(error, UdiKitError):
            return error.exit_code
        return 2

    def log_warning(self, message: str, context: str = "") -> None:
        """Log warning with context"""
        self.warning_counts["Warning"] = self.warning_counts.get("Warning", 0) + 1
        logger.warning(f"{context}: {message}" if context else message)

    def get_error_summary(self) -> dict[str, Any]:
        return {
            "error_counts": self.error_counts.copy(),
            "warning_counts": self.warning_counts.copy(),
            "total_errors": sum(self.error_counts.values()),
            "total_warnings": sum(self.warning_counts.values()),
        }

    def reset_counts(self) -> None:
        self.error_counts.clear()
        self.warning_counts.clear()


# Global error handler instance
error_handler = ErrorHandler()


def setup_logging(
    config: Config,
    log_file: Path | None = None,
    max_file_size: str = "10 MB",
    retention: str = "1 week",
) -> None:
    """
    Configure loguru sinks

    Args:
        config: Configuration object (verbose selects DEBUG)
        log_file: Optional log file, always written at DEBUG
        max_file_size: Rotation size for the log file
        retention: Retention period for rotated logs
    """
    logger.remove()

    level = "DEBUG" if config.verbose else "WARNING"
    console_format = (
        "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
        "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
    )
    logger.add(sys.stderr, format=console_format, level=level, colorize=True, backtrace=False, diagnose=False)

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_file,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG",
            rotation=max_file_size,
            retention=retention,
            encoding="utf-8",
        )


def get_logger(name: str):
    """Logger bound to a component name"""
    return logger.bind(name=name)
