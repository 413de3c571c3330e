import numpy as np
import pytest

from frwflow.odekit import IntegratorSettings


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tight():
    return IntegratorSettings(abs_tol=1e-14, rel_tol=1e-12, max_steps=2_000_000)
