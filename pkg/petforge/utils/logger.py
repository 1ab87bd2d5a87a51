"""
Lab logging - one 'petforge' logger shared by the CLI, the Lab and every manager.

The console handler writes to stderr because the CLI reserves stdout for metric
lines. PETFORGE_LOG_TO_FILE adds a rotating file with timestamps and source locations.
"""
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, Optional

from petforge.config.lab_config import LabConfig

LOGGER_NAME = 'petforge'
CONSOLE_FORMAT = '%(levelname)s: %(message)s'
FILE_FORMAT = '%(asctime)s %(levelname)-8s %(filename)s:%(lineno)d %(message)s'


def _resolve_level(name: str) -> int:
    level = getattr(logging, name.strip().upper(), None)
    return level if isinstance(level, int) else logging.INFO


def _console_handler() -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(logging.DEBUG if LabConfig.DEBUG_MODE else logging.INFO)
    handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    return handler


def _file_handler(path: str) -> logging.Handler:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    handler = RotatingFileHandler(path, maxBytes=LabConfig.MAX_LOG_SIZE, backupCount=3)
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(FILE_FORMAT))
    return handler


class LabLogger:
    """Process-wide owner of the 'petforge' logger."""

    _instance: Optional['LabLogger'] = None
    _logger: Optional[logging.Logger] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if self._logger is None:
            type(self)._logger = self._build()

    @staticmethod
    def _build() -> logging.Logger:
        logger = logging.getLogger(LOGGER_NAME)
        logger.setLevel(_resolve_level(LabConfig.LOG_LEVEL))
        logger.propagate = False
        logger.handlers.clear()
        logger.addHandler(_console_handler())
        if LabConfig.LOG_TO_FILE:
            try:
                logger.addHandler(_file_handler(LabConfig.LOG_FILE_PATH))
            except OSError as exc:
                logger.warning("File logging disabled (%s): %s", LabConfig.LOG_FILE_PATH, exc)
        return logger

    @property
    def logger(self) -> logging.Logger:
        return self._logger

    def run_event(self, event: str, details: Optional[Dict[str, Any]] = None):
        """One INFO record per lab milestone (corpus written, run finished, ...)."""
        if details:
            self._logger.info(f"RUN_EVENT: {event} - {details}")
        else:
            self._logger.info(f"RUN_EVENT: {event}")

    def performance(self, operation: str, duration_ms: float):
        self._logger.debug(f"PERFORMANCE: {operation} took {duration_ms:.2f}ms")


lab_logger = LabLogger()


def log_info(message: str, *args, **kwargs):
    lab_logger.logger.info(message, *args, **kwargs)


def log_debug(message: str, *args, **kwargs):
    lab_logger.logger.debug(message, *args, **kwargs)


def log_warning(message: str, *args, **kwargs):
    lab_logger.logger.warning(message, *args, **kwargs)


def log_error(message: str, *args, **kwargs):
    lab_logger.logger.error(message, *args, **kwargs)


def log_exception(message: str, *args, **kwargs):
    """Error record with the active traceback attached."""
    lab_logger.logger.exception(message, *args, **kwargs)


def log_run_event(event: str, details: Optional[Dict[str, Any]] = None):
    lab_logger.run_event(event, details)


def log_performance(operation: str, duration_ms: float):
    lab_logger.performance(operation, duration_ms)
