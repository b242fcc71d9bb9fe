"""Configuration management for Gamma Observer."""

import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from ..core.error_handler import ConfigurationError
from ..schemas.scenario import ScenarioConfig

logger = logging.getLogger(__name__)


def load_config(config_path: Union[str, Path]) -> ScenarioConfig:
    """Load a scenario from a YAML file.

    Args:
        config_path: Path to the configuration file

    Returns:
        ScenarioConfig object
    """
    config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_path, "r") as f:
        config_data = yaml.safe_load(f)

    if config_data is None:
        config_data = {}
    if not isinstance(config_data, dict):
        raise ConfigurationError(f"Top level of {config_path} must be a mapping", field_path="<root>")

    return ScenarioConfig(**config_data)


def default_config() -> Dict[str, Any]:
    """Interval scenario with one irrational-point sensor and a two-level region nest."""
    return {
        "domain": {
            "kind": "interval",
            "lengths": [1.0],
            "diffusivity": 1.0,
            "grid_resolution": 64,
        },
        "mode_count": 8,
        "sensors": [
            {"kind": "interior_pointwise", "location": [0.7071067811865476], "name": "b_irrational"},
        ],
        "regions": [
            {"name": "gamma", "pieces": [{"edge": "left"}]},
            {"name": "boundary", "pieces": [{"edge": "left"}, {"edge": "right"}]},
        ],
        "simulation": {"horizon": 0.5, "time_steps": 200},
        "observability": {"threshold": 1e-8},
        "observer": {"method": "modal_shift", "target_rate": 1.0, "horizon": 5.0, "time_steps": 500},
        "reconstruction": {"regularization": 1e-10, "trials": 10, "seed": 0},
        "output_dir": "results",
        "logging": {},
    }


def create_default_config(config_path: Union[str, Path]) -> None:
    """Create a default configuration file.

    Args:
        config_path: Path where to create the configuration file
    """
    config_path = Path(config_path)

    with open(config_path, "w") as f:
        yaml.dump(default_config(), f, default_flow_style=False, indent=2, sort_keys=False)

    logger.info(f"Created default configuration file: {config_path}")
