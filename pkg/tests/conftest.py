# tests/conftest.py
import math

import pytest

from rod_app.core_model import Params
from rod_app.discretization import build_grid

R = math.pi
ON_RAY_1 = (1.0, 0.05859375)     # on l_1 only
OFF_RAY = (1.0, 0.2)
DOUBLE_12 = (0.625, 0.03515625)  # l_1 and l_2 cross here
PROBE_NEG = (0.725, 0.06515625)  # offset 0.1, slope 0.3 from DOUBLE_12
PROBE_POS = (0.725, 0.13515625)  # offset 0.1, slope 1.0


@pytest.fixture(scope="session")
def grid201():
    return build_grid(201, R)


@pytest.fixture(scope="session")
def grid51():
    return build_grid(51, R)


@pytest.fixture
def on_ray_params():
    return Params(alpha=ON_RAY_1[0], beta=ON_RAY_1[1], gamma=1.0, r=R)
