"""Tests for the chunked sweep helpers."""

import numpy as np
import pytest

from hofer_lab.core.maps import Twist
from hofer_lab.core.models import GridSpec
from hofer_lab.core.norms import derivative_norm
from hofer_lab.core.phase_space import ANNULUS
from hofer_lab.core.sweep import (
    configure_workers,
    get_worker_count,
    level_samples,
    map_chunks,
    sweep_concat,
    sweep_max,
)


def test_chunks_come_back_in_order():
    points = np.arange(10.0)[:, None]
    assert map_chunks(lambda chunk: chunk[:, 0].tolist(), points, chunk_size=3) == [
        [0.0, 1.0, 2.0],
        [3.0, 4.0, 5.0],
        [6.0, 7.0, 8.0],
        [9.0],
    ]


def test_empty_sweeps():
    empty = np.empty((0, 2))
    assert sweep_max(lambda chunk: chunk[:, 0], empty) == 0.0
    assert sweep_concat(lambda chunk: chunk[:, 0], empty).size == 0


def test_worker_count_changes_speed_only():
    points = np.random.default_rng(5).uniform(size=(5000, 2))
    single = sweep_concat(lambda chunk: chunk[:, 0] * chunk[:, 1], points)
    configure_workers(4)
    assert get_worker_count() == 4
    pooled = sweep_concat(lambda chunk: chunk[:, 0] * chunk[:, 1], points)
    np.testing.assert_array_equal(pooled, single)
    assert sweep_max(lambda chunk: chunk[:, 0], points) == float(points[:, 0].max())


def test_derivative_sweep_is_worker_independent():
    twist = Twist(polynomial=[0.0, 0.5, 0.75])
    grid = GridSpec(counts=(64, 33), levels=2)
    single = derivative_norm(twist, ANNULUS, grid)
    configure_workers(3)
    assert derivative_norm(twist, ANNULUS, grid) == single


def test_invalid_worker_count():
    with pytest.raises(ValueError):
        configure_workers(0)


def test_levels_are_nested_and_finer():
    levels = list(level_samples(ANNULUS, GridSpec(counts=(8, 5), levels=3)))
    assert [counts for counts, _, _ in levels] == [(8, 5), (16, 9), (32, 17)]
    meshes = [mesh for _, _, mesh in levels]
    assert meshes[0] > meshes[1] > meshes[2]
    coarse = {tuple(p) for p in levels[0][1]}
    fine = {tuple(p) for p in levels[1][1]}
    assert coarse <= fine
