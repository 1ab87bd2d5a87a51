"""
Lab Configuration - process-wide switches read from the environment
"""
import os
from typing import Dict, Any


def _env_flag(name: str, default: bool = False) -> bool:
    return os.getenv(name, str(default)).strip().lower() in ('1', 'true', 'yes', 'on')


class LabConfig:
    """Centralized process configuration."""

    # Debug and Development
    DEBUG_MODE = _env_flag('PETFORGE_DEBUG')

    # Logging
    LOG_LEVEL = os.getenv('PETFORGE_LOG_LEVEL', 'DEBUG' if DEBUG_MODE else 'INFO')
    LOG_TO_FILE = _env_flag('PETFORGE_LOG_TO_FILE')
    LOG_FILE_PATH = os.getenv('PETFORGE_LOG_FILE', 'petforge.log')
    MAX_LOG_SIZE = 10 * 1024 * 1024  # 10MB

    # Performance
    PERFORMANCE_WARN_MS = 5000.0  # training steps slower than this get logged
    PERFORMANCE_SAMPLES = 200

    # Tests
    SLOW_TESTS = _env_flag('PETFORGE_SLOW_TESTS')

    @classmethod
    def get_config_dict(cls) -> Dict[str, Any]:
        """Get all configuration as a dictionary."""
        config = {}
        for attr in dir(cls):
            if not attr.startswith('_') and not callable(getattr(cls, attr)):
                config[attr] = getattr(cls, attr)
        return config
