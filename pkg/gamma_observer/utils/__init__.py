"""Utility functions and helpers."""

from .config import create_default_config, load_config
from .logging import setup_logging
from .reporting import ExperimentReport, write_csv

__all__ = ["load_config", "create_default_config", "setup_logging", "ExperimentReport", "write_csv"]
