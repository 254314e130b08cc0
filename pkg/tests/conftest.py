import math

import pytest

from gibbs_shapes.models import make_model


@pytest.fixture(scope="session")
def uniform():
    return make_model("uniform")


@pytest.fixture(scope="session")
def quadratic():
    return make_model("power:p=2,a=0.5")


@pytest.fixture(scope="session")
def log_model():
    """u = ln x: critical, d = 0, v -> 0."""
    return make_model("critical:mustar=0,d=0,v=const:0")


@pytest.fixture(scope="session")
def d2_model():
    """u = -ln x: critical, d = 2, v = 0."""
    return make_model("critical:mustar=0,d=2,v=const:0")


LN2 = math.log(2.0)
LN4 = math.log(4.0)
