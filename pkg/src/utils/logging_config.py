"""
Logging configuration for the ranking engine.
"""
import logging
import sys
from datetime import datetime

from .config import LOGGER_NAME
from .exceptions import ConfigError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_level: str = "INFO") -> logging.Logger:
    """
    Configure the package logger; library modules log through its children.

    Log lines go to stderr so that rendered tables on stdout stay clean.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Configured logger instance

    Raises:
        ConfigError: Unknown level name
    """
    level = logging.getLevelName(str(log_level).upper())
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level {log_level!r}")

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(level)
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
    logger.addHandler(console_handler)

    return logger


def log_command(action: str, details: dict = None):
    """
    Log a command-line invocation.

    Args:
        action: The subcommand being run
        details: Arguments worth recording
    """
    logger = logging.getLogger(LOGGER_NAME)

    log_entry = {
        "timestamp": datetime.now().isoformat(),
        "action": action,
        "details": details or {}
    }

    logger.info(f"Command: {log_entry}")


def log_training_epoch(epoch: int, mean_loss: float, duration: float, details: dict = None):
    """
    Progress sink for training: one entry per finished epoch.

    Args:
        epoch: Zero-based epoch index
        mean_loss: Mean triplet loss over the epoch
        duration: Wall-clock seconds spent in the epoch
        details: Additional details, e.g. the loss trend
    """
    logger = logging.getLogger(LOGGER_NAME)

    log_entry = {
        "timestamp": datetime.now().isoformat(),
        "epoch": epoch,
        "mean_loss": round(float(mean_loss), 6),
        "duration_s": round(float(duration), 3),
        "details": details or {}
    }

    logger.info(f"Training epoch: {log_entry}")


def log_error(error: Exception, context: str = ""):
    """
    Log errors with context information.

    Args:
        error: The exception that occurred
        context: Additional context about where the error occurred
    """
    logger = logging.getLogger(LOGGER_NAME)

    log_entry = {
        "timestamp": datetime.now().isoformat(),
        "error_type": type(error).__name__,
        "error_message": str(error),
        "context": context
    }

    logger.error(f"Error occurred: {log_entry}", exc_info=True)
