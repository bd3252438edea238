import pytest

from cyclekernel.probspace import bimodal_density, gaussian_standard, make_finite

THIRD = 1.0 / 3.0


@pytest.fixture
def uniform3():
    return make_finite(['a', 'b', 'c'], [THIRD, THIRD, 1.0 - 2 * THIRD])


@pytest.fixture
def uniform3_y():
    return make_finite(['u', 'v', 'w'], [THIRD, THIRD, 1.0 - 2 * THIRD])


@pytest.fixture
def skewed():
    return make_finite(['a', 'b', 'c'], [0.5, 0.3, 0.2])


@pytest.fixture(scope='session')
def std_normal():
    return gaussian_standard(1, 8.0, 1024)


@pytest.fixture(scope='session')
def std_normal_2d():
    return gaussian_standard(2, 8.0, 128)


@pytest.fixture(scope='session')
def bimodal():
    return bimodal_density()
