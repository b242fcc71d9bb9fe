"""Logging configuration for Gamma Observer."""

import logging
import logging.config
from pathlib import Path
from typing import Any, Dict, Optional, Union


def setup_logging(
    config: Optional[Dict[str, Any]] = None,
    log_file: Optional[Union[str, Path]] = None,
    console_level: str = "INFO",
) -> None:
    """Set up logging configuration.

    Args:
        config: Optional logging configuration dictionary, merged over the defaults
        log_file: Rotating log file; no file handler when omitted
        console_level: Level of the console handler
    """
    handlers = ["console"]
    default_config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S"
            },
            "detailed": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S"
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": console_level,
                "formatter": "default",
                "stream": "ext://sys.stdout"
            }
        },
        "loggers": {
            "gamma_observer": {
                "level": "DEBUG",
                "handlers": handlers,
                "propagate": False
            }
        },
        "root": {
            "level": "WARNING",
            "handlers": ["console"]
        }
    }

    if log_file is not None:
        default_config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": "DEBUG",
            "formatter": "detailed",
            "filename": str(log_file),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5
        }
        handlers.append("file")

    # Merge with provided config, one level deep
    for key, value in (config or {}).items():
        if isinstance(value, dict) and isinstance(default_config.get(key), dict):
            default_config[key] = {**default_config[key], **value}
        else:
            default_config[key] = value

    logging.config.dictConfig(default_config)
