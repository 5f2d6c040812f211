import numpy as np
import pytest

from kinfp import ModelParams, LyapunovSpec, ExpWeight, PolyWeight


@pytest.fixture(scope="session")
def exp_params():
    return ModelParams(alpha=1.5, kind="exp", beta=0.5)


@pytest.fixture(scope="session")
def gauss_params():
    return ModelParams(alpha=2.0, kind="exp", beta=2.0)


@pytest.fixture(scope="session")
def poly_params():
    return ModelParams(alpha=2.0, kind="poly", gamma=2.0)


@pytest.fixture(scope="session")
def exp_spec():
    return LyapunovSpec(
        ell=2.0, eps=0.05, a_exp=0.5, b_exp=0.6, mode=ExpWeight(theta=0.25, delta=0.05)
    )


@pytest.fixture(scope="session")
def poly_spec():
    return LyapunovSpec(
        ell=1.75, eps=0.1, a_exp=0.0, b_exp=0.6, mode=PolyWeight(k=1.5)
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
