import numpy as np
import pytest

from somwork.models import SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig1_params():
    return SystemParams(lam=0.1, c=0.7, alpha=0.0)


@pytest.fixture
def case_a():
    return SystemParams(lam=0.1, kappa=0.1, alpha=0.0, c=0.5)


@pytest.fixture
def case_b():
    return SystemParams(lam=0.1, kappa=0.1, alpha=2.0, c=1.0)
