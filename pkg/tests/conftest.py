import numpy as np
import pytest

from flexhull import make_battery, regular_prototype


@pytest.fixture(scope="session")
def square():
    return regular_prototype(4)


@pytest.fixture(scope="session")
def hexagon():
    return regular_prototype(6)


@pytest.fixture(scope="session")
def triangle():
    return regular_prototype(3)


@pytest.fixture(scope="session")
def disk():
    """Near-unit-disk battery used by the golden cases."""
    return make_battery(0.999, 1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
