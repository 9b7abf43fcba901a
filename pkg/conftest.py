"""Shared fixtures for the laboratory test-suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.prodgrid import HermitianField, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def small_grid():
    """p=1 grid small enough for Newton solves in unit tests."""
    return build_grid(p=1, torus_res=4, s_res=8, theta_res=4)


@pytest.fixture
def flat_grid():
    return build_grid(p=1, torus_res=8, s_res=8, theta_res=8)


@pytest.fixture
def identity2():
    return HermitianField.identity(2)
