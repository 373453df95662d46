"""
Stage timing utilities
"""

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

from loguru import logger


@dataclass
class StageMetrics:
    """Accumulated timings and output record counts for one stage name"""
    runs: int = 0
    records: int = 0
    total_time: float = 0.0
    min_time: float = float("inf")
    max_time: float = 0.0

    @property
    def avg_time(self) -> float:
        return self.total_time / self.runs if self.runs else 0.0


@dataclass
class PerformanceMonitor:
    """Records wall-clock time per pipeline stage"""

    stages: dict[str, StageMetrics] = field(default_factory=lambda: defaultdict(StageMetrics))

    @contextmanager
    def measure(self, stage: str):
        """Context manager timing one stage run"""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - start_time
            metrics = self.stages[stage]
            metrics.runs += 1
            metrics.total_time += duration
            metrics.min_time = min(metrics.min_time, duration)
            metrics.max_time = max(metrics.max_time, duration)
            logger.debug(f"Stage '{stage}' completed in {duration:.3f}s")

    def count(self, stage: str, records: int) -> None:
        """Add records written by a stage run"""
        self.stages[stage].records += records

    def get_summary(self) -> dict[str, Any]:
        return {
            "total_time": sum(m.total_time for m in self.stages.values()),
            "stages": {
                name: {
                    "runs": m.runs,
                    "records": m.records,
                    "total_time": m.total_time,
                    "average_time": m.avg_time,
                }
                for name, m in self.stages.items()
            },
        }

    def reset(self) -> None:
        self.stages.clear()


# Global performance monitor instance
performance_monitor = PerformanceMonitor()
