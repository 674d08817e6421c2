import pytest

from perflab import SeedSpec, make_gaussian_mean_instance
from perflab import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compilation happens once here so timed tests measure the math only
    _kernels.warmup()


@pytest.fixture
def canonical():
    """mu0=1, a=0.5, ridge=1, sigma=1 over [-3, 3]."""
    return make_gaussian_mean_instance()


@pytest.fixture
def seed():
    return SeedSpec(20_240_817)
