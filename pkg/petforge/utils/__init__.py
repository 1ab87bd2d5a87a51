"""
Lab utilities package - logging and timing helpers.
"""

from .logger import (
    lab_logger,
    log_info,
    log_debug,
    log_warning,
    log_error,
    log_exception,
    log_run_event,
    log_performance
)
from .performance import PerformanceMonitor, get_performance_monitor, time_operation

__all__ = [
    'lab_logger',
    'log_info',
    'log_debug',
    'log_warning',
    'log_error',
    'log_exception',
    'log_run_event',
    'log_performance',
    'PerformanceMonitor',
    'get_performance_monitor',
    'time_operation'
]
