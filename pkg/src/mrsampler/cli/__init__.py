from .config import ConfigError, ExperimentConfig, load_config, parse_config, parse_method
from .main import main

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "main", "parse_config", "parse_method"]
