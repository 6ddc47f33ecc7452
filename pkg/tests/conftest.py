import pytest

from lqgame.discount import DiscountSpec
from lqgame.riccati import ModelParams


@pytest.fixture(scope="session")
def mixture():
    return DiscountSpec.mixture(0.5, 0.15, 0.3)


@pytest.fixture(scope="session")
def baseline(mixture):
    return ModelParams(10.0, 0.25, 0.5, mixture)


@pytest.fixture(scope="session")
def baseline_exp():
    return ModelParams(10.0, 0.25, 0.5, DiscountSpec.exponential(0.15))
