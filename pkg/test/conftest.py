import mongomock
import pytest

from debiased_polyfit.randmat import RngState


@pytest.fixture
def database():
    return mongomock.MongoClient().db


@pytest.fixture
def seed():
    return RngState(seed=20240603)


@pytest.fixture
def rng(seed):
    return seed.generator()
