import numpy as np
import pytest

from propa import gen_free_group_ball, gen_grid, gen_path


@pytest.fixture(scope="session")
def path10():
    return gen_path(10)


@pytest.fixture(scope="session")
def path100():
    return gen_path(100)


@pytest.fixture(scope="session")
def grid2():
    return gen_grid(2, 5)


@pytest.fixture(scope="session")
def tree2():
    return gen_free_group_ball(2, 4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
