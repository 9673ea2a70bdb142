import numpy as np
import pytest

from sgmnse import dynamics as dy
from sgmnse import forcing as fc
from sgmnse import spectral as sp


@pytest.fixture(scope="session")
def domain():
    return sp.Domain()


@pytest.fixture(scope="session")
def domain32():
    return sp.Domain(grid=(32, 32, 32))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def forcing_zero(domain):
    return fc.ForcingSpec(f_inf=sp.zero_velocity(domain))


@pytest.fixture(scope="session")
def forcing_const(domain):
    f = sp.random_velocity(domain, np.random.default_rng(40), amplitude=0.5)
    g = sp.random_velocity(domain, np.random.default_rng(41), amplitude=0.3,
                           kmax=3)
    return fc.ForcingSpec(f_inf=f, envelope=fc.Envelope("zero"), g=g)


@pytest.fixture(scope="session")
def forcing_exp(domain):
    f = sp.random_velocity(domain, np.random.default_rng(42), amplitude=0.4,
                           kmax=2)
    g = sp.random_velocity(domain, np.random.default_rng(43), amplitude=0.25,
                           kmax=2)
    return fc.ForcingSpec(f_inf=f, f_pert=f.copy(),
                          envelope=fc.Envelope("exp"), g=g)


@pytest.fixture(scope="session")
def solver_additive():
    return dy.SolverConfig(noise_mode="additive")


@pytest.fixture(scope="session")
def solver_multiplicative():
    return dy.SolverConfig(noise_mode="multiplicative")
