import numpy as np
import pytest

from stabcert.fem import FemConfig, assemble_fem


@pytest.fixture(scope="session")
def fem():
    """The 180-unknown convection-diffusion demo operator."""
    return assemble_fem(FemConfig(180))


@pytest.fixture(scope="session")
def fem_small():
    return assemble_fem(FemConfig(40))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
