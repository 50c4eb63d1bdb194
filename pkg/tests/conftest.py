import pytest

from hexperc.lattice import build_lattice


@pytest.fixture(scope="session")
def lat2():
    return build_lattice(2)


@pytest.fixture(scope="session")
def lat3():
    return build_lattice(3)
