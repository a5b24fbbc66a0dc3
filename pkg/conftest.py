import random

import pytest

from services.quad_algebra import LinFactor, Quad
from services.richelot_core import FactoredSextic, SignChoice

TEST_SEED = 20240517


@pytest.fixture
def standard_fs():
    """p = x(x-1), q = (x-2)(x-3), r = (x-4)(x-5); Delta = 32."""
    return FactoredSextic(Quad(0, -1, 1), Quad(6, -5, 1), Quad(20, -9, 1))


@pytest.fixture
def standard_lins():
    """x, x-1, x-2, x-3, x-4, x-5 as (p1, p2, q1, q2, r1, r2)."""
    return [LinFactor(-k, 1) for k in range(6)]


@pytest.fixture
def standard_signs(standard_lins):
    return SignChoice.from_factors(*standard_lins)


@pytest.fixture
def rng():
    return random.Random(TEST_SEED)


@pytest.fixture
def quick_config():
    """Small trial counts so the exact suite stays fast under pytest."""
    return {"seed": TEST_SEED, "trials": 50, "height": 20}
