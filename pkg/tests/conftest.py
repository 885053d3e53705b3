import random

import pytest

from zkams.algebra import DEFAULT_PARAMS
from zkams.relation import build_phc_relation, commit_setup_for, honest_client


@pytest.fixture(scope="session")
def algebra():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def shape():
    return build_phc_relation(DEFAULT_PARAMS)


@pytest.fixture(scope="session")
def setup(shape):
    return commit_setup_for(shape)


@pytest.fixture(scope="session")
def clients(shape, setup):
    rng = random.Random(2024)
    return [honest_client(shape, setup, rng) for _ in range(8)]
