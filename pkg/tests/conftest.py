"""Shared fixtures for the hofer-lab test suite."""

import pytest

from hofer_lab.core.hamiltonians import AmplitudeProfile, ConjugatorHamiltonian
from hofer_lab.core.maps import HamFlow
from hofer_lab.core.models import GridSpec
from hofer_lab.core.sweep import configure_workers


@pytest.fixture(autouse=True)
def single_worker():
    """Every test starts and ends with the default single-worker pool."""
    configure_workers(1)
    yield
    configure_workers(1)


@pytest.fixture
def small_grid() -> GridSpec:
    return GridSpec(counts=(16, 9), levels=1)


@pytest.fixture
def two_level_grid() -> GridSpec:
    return GridSpec(counts=(16, 9), levels=2)


@pytest.fixture
def profile() -> AmplitudeProfile:
    return AmplitudeProfile(lo=0.1, hi=0.9, ramp=0.2, peak=0.05)


@pytest.fixture
def conjugator_flow(profile: AmplitudeProfile) -> HamFlow:
    return HamFlow(hamiltonian=ConjugatorHamiltonian(frequency=3, profile=profile))
