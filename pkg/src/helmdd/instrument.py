"""Wall-clock cost counters shared by the linear-algebra and solver layers.

Three categories are tracked: ``local_solve`` (factorized subdomain and
interface-mass solves), ``spmm`` (sparse matrix times dense batch) and
``orthogonalization`` (Krylov basis construction). Each timed call is
attributed to exactly one category.
"""

import threading
import time

CATEGORIES = ("local_solve", "spmm", "orthogonalization")


class CostCounters:
    """Thread-safe accumulated seconds and call counts per category."""

    def __init__(self):
        self._lock = threading.Lock()
        self.seconds = {c: 0.0 for c in CATEGORIES}
        self.calls = {c: 0 for c in CATEGORIES}

    def add(self, category: str, dt: float) -> None:
        if category not in self.seconds:
            raise KeyError(f"unknown cost category {category!r}")
        with self._lock:
            self.seconds[category] += dt
            self.calls[category] += 1

    def snapshot(self) -> dict[str, float]:
        with self._lock:
            return dict(self.seconds)

    def reset(self) -> None:
        with self._lock:
            for c in CATEGORIES:
                self.seconds[c] = 0.0
                self.calls[c] = 0


class timed:
    """Context manager recording elapsed wall time into a counter category."""

    def __init__(self, counters: CostCounters | None, category: str):
        self.counters = counters
        self.category = category

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        if self.counters is not None:
            self.counters.add(self.category, time.perf_counter() - self.t0)
        return False


def delta(after: dict[str, float], before: dict[str, float]) -> dict[str, float]:
    """Per-category difference of two snapshots."""
    return {c: after[c] - before.get(c, 0.0) for c in after}
