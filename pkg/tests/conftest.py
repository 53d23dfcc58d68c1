import numpy as np
import pytest

from lassonse import make_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=["sparse", "lowrank", "blocksparse"])
def small_model(request):
    dims = {"sparse": {"n": 40, "k": 5},
            "lowrank": {"d": 7, "r": 2},
            "blocksparse": {"t": 12, "b": 3, "k": 3}}[request.param]
    return make_model(request.param, dims, seed=11)
