import numpy as np
import pytest

from app.algebra.coefficients import preset_q_ccr, preset_tccr, preset_zero
from app.config import settings, use_defaults
from tests.support import q_matrix


@pytest.fixture(autouse=True)
def default_settings():
    """Every test sees the class-level defaults, whatever WICK_* says."""
    use_defaults(settings)
    yield
    use_defaults(settings)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def zero2():
    return preset_zero(2)


@pytest.fixture
def scalar_q():
    """d=1 q-CCR with the given real q."""
    def make(q, allow_modulus_violation=False):
        return preset_q_ccr([[q]], allow_modulus_violation)
    return make


@pytest.fixture
def unimodular_i():
    """d=2 q-CCR with q_12 = i and q_ii = 0."""
    return preset_q_ccr(q_matrix(2, 1j, 0.0))


@pytest.fixture
def tccr():
    return preset_tccr
