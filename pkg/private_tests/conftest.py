"""
Shared fixtures: catalog loops and a clean worker pool per test session.
"""

import pytest

from astprove import catalog
from astprove.background import shutdown_executors
from astprove.lang import load_loop


def loop_of(name, index=0):
    return load_loop(catalog.source(name), index)


@pytest.fixture
def symmetric_walk():
    return loop_of("symmetric_walk")


@pytest.fixture
def isqrt_walk():
    return loop_of("isqrt_walk")


@pytest.fixture
def geometric_walk():
    return loop_of("geometric_walk")


@pytest.fixture
def parabola_walk():
    return loop_of("parabola_walk")


@pytest.fixture
def countdown():
    return loop_of("countdown")


@pytest.fixture(scope="session", autouse=True)
def _stop_pools():
    yield
    shutdown_executors()
