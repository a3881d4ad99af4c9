import numpy as np
import pytest

from adiabatic_lab import models
from adiabatic_lab.cheb import ChebGrid


@pytest.fixture(scope="session")
def grid64():
    return ChebGrid(64)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def qubit_dephasing_linear():
    """Uniformly rotating dephasing qubit; the workhorse fixture."""
    b_of, bdot_of = models.rotating_field(1.0, np.pi / 2, 1.0)
    return models.dephasing_qubit(b_of, bdot_of, 0.5, models.Schedule("linear"))


@pytest.fixture(scope="session")
def qubit_dephasing_path(qubit_dephasing_linear):
    return models.lindblad_generator(qubit_dephasing_linear, 64)


@pytest.fixture(scope="session")
def markov_two_state_path():
    spec = models.markov_two_state()
    return models.markov_generator_path(spec, 64)


def random_lindblad_superop(rng, d=2):
    """A generic (non-dephasing) Lindblad superoperator for sanity checks."""
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return models.lindblad_matrix(h, [g])
