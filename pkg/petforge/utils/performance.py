"""
Wall-clock timing of lab operations (training steps, embedding passes, corpus writes).

Each named operation keeps a bounded window of recent durations plus a total call
count, so long runs report recent step times without growing memory.
"""
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, Optional

from petforge.config.lab_config import LabConfig
from petforge.utils.logger import log_performance, log_warning


@dataclass
class OperationStats:
    window: int
    calls: int = 0
    samples: Deque[float] = field(default_factory=deque)

    def __post_init__(self):
        self.samples = deque(self.samples, maxlen=self.window)

    def record(self, duration_ms: float):
        self.samples.append(duration_ms)
        self.calls += 1

    @property
    def average_ms(self) -> float:
        return sum(self.samples) / len(self.samples)

    @property
    def max_ms(self) -> float:
        return max(self.samples)


class PerformanceMonitor:
    """Durations per operation name, with a warning above `warn_ms`."""

    def __init__(self, max_samples: int = LabConfig.PERFORMANCE_SAMPLES,
                 warn_ms: float = LabConfig.PERFORMANCE_WARN_MS):
        self.max_samples = max_samples
        self.warn_ms = warn_ms
        self.stats: Dict[str, OperationStats] = {}
        self._started: Dict[str, float] = {}

    def start_operation(self, name: str):
        self._started[name] = time.perf_counter()

    def end_operation(self, name: str) -> Optional[float]:
        """Stop the clock for `name`; milliseconds, or None if it never started."""
        started = self._started.pop(name, None)
        if started is None:
            log_warning(f"Operation '{name}' was not started")
            return None
        duration = (time.perf_counter() - started) * 1000.0
        self.stats.setdefault(name, OperationStats(self.max_samples)).record(duration)

        log_performance(name, duration)
        if duration > self.warn_ms:
            log_warning(f"Slow operation '{name}': {duration:.0f}ms")
        return duration

    def calls(self, name: str) -> int:
        entry = self.stats.get(name)
        return entry.calls if entry else 0

    def get_operation_average(self, name: str) -> Optional[float]:
        entry = self.stats.get(name)
        return entry.average_ms if entry else None

    def get_operation_max(self, name: str) -> Optional[float]:
        entry = self.stats.get(name)
        return entry.max_ms if entry else None

    def get_performance_report(self) -> Dict[str, Any]:
        return {
            name: {'average_ms': entry.average_ms, 'max_ms': entry.max_ms,
                   'calls': entry.calls, 'samples': len(entry.samples)}
            for name, entry in self.stats.items()
        }

    def reset_stats(self):
        self.stats.clear()
        self._started.clear()


class PerformanceContext:
    """`with` block timing one run of an operation; `duration_ms` is set on exit."""

    def __init__(self, monitor: PerformanceMonitor, operation_name: str):
        self.monitor = monitor
        self.operation_name = operation_name
        self.duration_ms: Optional[float] = None

    def __enter__(self) -> 'PerformanceContext':
        self.monitor.start_operation(self.operation_name)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration_ms = self.monitor.end_operation(self.operation_name)


performance_monitor = PerformanceMonitor()


def get_performance_monitor() -> PerformanceMonitor:
    return performance_monitor


def time_operation(operation_name: str) -> PerformanceContext:
    return PerformanceContext(performance_monitor, operation_name)
