"""
Centralized logging configuration for gradcode
"""
import logging
import logging.config
import os
import sys
from typing import Any, Dict

import structlog

from gradcode.config import settings


def get_logging_config() -> Dict[str, Any]:
    """
    Get logging configuration based on environment settings
    """
    log_level = settings.log
    debug = log_level == "DEBUG"

    handlers: Dict[str, Any] = {
        "console": {
            "class": "logging.StreamHandler",
            "level": log_level,
            "formatter": "detailed" if debug else "default",
            "stream": sys.stderr,
        },
    }
    if settings.log_file:
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": "INFO",
            "formatter": "detailed",
            "filename": settings.log_file,
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
        }

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
            "detailed": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(module)s - %(funcName)s:%(lineno)d - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
        },
        "handlers": handlers,
        "loggers": {
            "gradcode": {
                "level": log_level,
                "handlers": list(handlers),
                "propagate": False,
            },
        },
        "root": {
            "level": "WARNING",
            "handlers": ["console"],
        },
    }


def configure_structlog() -> None:
    """
    Route structlog events through the stdlib handlers
    """
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.KeyValueRenderer(key_order=["event"]),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def setup_logging() -> None:
    """
    Setup logging configuration
    """
    if settings.log_file:
        os.makedirs(os.path.dirname(settings.log_file) or ".", exist_ok=True)

    logging.config.dictConfig(get_logging_config())
    configure_structlog()

    logger = get_logger("logging_config")
    logger.debug("logging configured", level=settings.log)


def get_logger(name: str) -> Any:
    """
    Get a logger with the specified name
    """
    if not structlog.is_configured():
        configure_structlog()
    return structlog.stdlib.get_logger(f"gradcode.{name}")
