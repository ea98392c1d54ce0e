import numpy as np
import pytest

from wcorr.correlation import OptimizerConfig

# Lighter schedules for the suite; the default config is exercised through the CLI.
FAST = OptimizerConfig(coarse_tol=1e-2, inner_restarts=12, outer_restarts=6, outer_polish=2, inner_polish=3)
TWO = OptimizerConfig(coarse_tol=1e-2, inner_restarts=8, outer_restarts=16, outer_polish=2, inner_polish=3)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
