"""Shared test fixtures and configuration for pytest."""

import pytest

from decoupling_lab.batch import build_decomposition
from decoupling_lab.geometry import build_cap_tree, build_scale_ladder
from decoupling_lab.synthesis import build_grid

SMALL_R = 256


@pytest.fixture(autouse=True)
def reset_random_seed():
    """Reset random seed before each test for reproducibility."""
    import random

    import numpy as np

    np.random.seed(42)
    random.seed(42)


@pytest.fixture(scope="session")
def ladder():
    """Scale ladder at R = 256."""
    return build_scale_ladder(SMALL_R)


@pytest.fixture(scope="session")
def tree(ladder):
    """Cap tree at R = 256."""
    return build_cap_tree(ladder)


@pytest.fixture(scope="session")
def grid():
    """Sampling grid at R = 256 with the default oversampling."""
    return build_grid(SMALL_R, 4)


@pytest.fixture(scope="session")
def decomp():
    """Pruned random-phase decomposition at R = 256, alpha = R^(1/4)."""
    return build_decomposition("random_phase", SMALL_R, SMALL_R**0.25, seed=7)
