import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rotalpha.lattice import DomainParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def box():
    """Anisotropic box with rational squared radii."""
    return DomainParams(a2=1.3, a3=0.7)


@pytest.fixture
def cube():
    return DomainParams()


@pytest.fixture
def generic_box():
    """Box whose squared radii are irrational."""
    return DomainParams(a2=2 ** 0.25, a3=3 ** 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
