import pytest

from hatm.engine import solve
from hatm.model import hiv_cd8_system
from hatm.oracle import rk_reference


@pytest.fixture(scope="session")
def hiv():
    return hiv_cd8_system()


@pytest.fixture(scope="session")
def series5(hiv):
    return solve(hiv, 5)


@pytest.fixture(scope="session")
def series10(hiv):
    return solve(hiv, 10)


@pytest.fixture(scope="session")
def oracle(hiv):
    return rk_reference(hiv, 1.0, rel_tol=1e-10, abs_tol=1e-12)
