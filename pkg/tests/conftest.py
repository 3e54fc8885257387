import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long-running statistical checks (acceptance suite)"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240815)


@pytest.fixture(scope="session")
def torus3():
    from tc3d.cells import build_complex

    return build_complex(3, 3)


@pytest.fixture(scope="session")
def torus4():
    from tc3d.cells import build_complex

    return build_complex(4, 2)


@pytest.fixture(scope="session")
def code2():
    from tc3d.toric import build_code

    return build_code(2)


@pytest.fixture(scope="session")
def code3():
    from tc3d.toric import build_code

    return build_code(3)
