"""Shared fixtures: small deterministic point sets reused across test files."""

import numpy as np
import pytest

from gmtlab.generators import (
    cantor_middle_thirds,
    four_corner_product,
    gen_grid,
    gen_ifs,
    gen_random_delta_s_set,
    segment_set,
)


@pytest.fixture(scope="session")
def grid3():
    return gen_grid(3)


@pytest.fixture(scope="session")
def grid5():
    return gen_grid(5)


@pytest.fixture(scope="session")
def grid9():
    return gen_grid(9)


@pytest.fixture(scope="session")
def cantor6():
    return gen_ifs(cantor_middle_thirds(), 3.0 ** -6)


@pytest.fixture(scope="session")
def fourcorner4():
    return gen_ifs(four_corner_product(), 4.0 ** -4)


@pytest.fixture(scope="session")
def segment256():
    return segment_set(256)


@pytest.fixture(scope="session")
def rand_half_set():
    return gen_random_delta_s_set(0.5, 2.0 ** -8, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
