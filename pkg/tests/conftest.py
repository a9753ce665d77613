import numpy as np
import pytest

from grnnd import set_backend


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test under each kernel backend."""
    set_backend(request.param)
    yield request.param
    set_backend(None)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
