import numpy as np
import pytest

from trialmech.fixtures import h1, t1


@pytest.fixture
def H1():
    return h1()


@pytest.fixture
def T1():
    return t1()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
