"""
Configuration repository - run configuration documents.
"""

import os
from typing import Dict

from petforge.config.run_config import RunConfig
from petforge.core.errors import ConfigurationError
from ..serializers import JSONSerializer


class ConfigRepository:
    """Loads and stores RunConfig JSON documents, caching parsed files."""

    def __init__(self):
        self.config_cache: Dict[str, RunConfig] = {}

    def load_run_config(self, path: str, validate: bool = True) -> RunConfig:
        key = os.path.abspath(path)
        if key in self.config_cache:
            return self.config_cache[key]
        data = JSONSerializer.load_from_file(path)
        if data is None:
            raise ConfigurationError(f"config file not found: {path}")
        config = RunConfig.from_dict(data)
        if validate:
            config.validate()
        self.config_cache[key] = config
        return config

    def save_run_config(self, config: RunConfig, path: str):
        JSONSerializer.save_to_file(config, path)
        self.config_cache[os.path.abspath(path)] = config

    def clear_cache(self):
        self.config_cache.clear()
