import numpy as np
import pytest

from twophase1d import FluxModel, Grid1D


@pytest.fixture(scope="session")
def tf1():
    return FluxModel.preset("TF1")


@pytest.fixture(scope="session")
def tf1_q0():
    return FluxModel.preset("TF1_Q0")


@pytest.fixture()
def grid_small():
    return Grid1D.from_bounds(-1.0, 1.0, 100, 100)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
