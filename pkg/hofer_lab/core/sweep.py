"""Grid sweeps over a process-wide worker pool with chunk-ordered reductions.

Sample arrays are cut into fixed-size chunks; each chunk is evaluated independently
and partial results are combined in chunk order, so the worker count changes speed only.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Optional, Tuple, TypeVar

import numpy as np

from .models import GridSpec
from .phase_space import Manifold, grid_mesh, level_counts, sample_grid

logger = logging.getLogger(__name__)

T = TypeVar("T")

CHUNK_SIZE = 1024

# Global worker pool (initialized on first use)
_executor: Optional[ThreadPoolExecutor] = None
_worker_count: int = 1


def configure_workers(count: int) -> None:
    """Set the worker count for subsequent sweeps."""
    global _executor, _worker_count
    if count < 1:
        raise ValueError(f"worker count must be at least 1, got {count}")
    if count != _worker_count and _executor is not None:
        _executor.shutdown(wait=True)
        _executor = None
    _worker_count = count
    logger.debug("sweep workers set to %d", count)


def get_worker_count() -> int:
    return _worker_count


def _get_executor() -> ThreadPoolExecutor:
    global _executor
    if _executor is None:
        _executor = ThreadPoolExecutor(max_workers=_worker_count, thread_name_prefix="hofer-sweep")
    return _executor


def map_chunks(fn: Callable[[np.ndarray], T], points: np.ndarray, chunk_size: int = CHUNK_SIZE) -> List[T]:
    """Apply fn to consecutive chunks of points; results come back in chunk order."""
    chunks = [points[i : i + chunk_size] for i in range(0, len(points), chunk_size)]
    if _worker_count == 1 or len(chunks) <= 1:
        return [fn(chunk) for chunk in chunks]
    return list(_get_executor().map(fn, chunks))


def sweep_max(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> float:
    """Maximum of a per-point quantity over all points (0 for an empty array)."""
    partial = map_chunks(lambda chunk: float(np.max(fn(chunk))) if len(chunk) else 0.0, points)
    return max(partial) if partial else 0.0


def sweep_concat(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> np.ndarray:
    """Per-point results for all points, in sample order."""
    parts = map_chunks(fn, points)
    return np.concatenate(parts) if parts else np.empty(0)


def level_samples(manifold: Manifold, grid: GridSpec) -> Iterator[Tuple[Tuple[int, int], np.ndarray, float]]:
    """(counts, samples, mesh) for each nested refinement level, coarsest first."""
    for counts in level_counts(manifold, grid):
        logger.debug("sweep level %s on %s", counts, manifold.kind.value)
        yield counts, sample_grid(manifold, counts), grid_mesh(manifold, counts)
