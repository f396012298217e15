import numpy as np
import pytest

from ovaosr.data import gen_gaussian_mixture, gen_ood_ring


@pytest.fixture(scope="session")
def mixture4():
    return gen_gaussian_mixture(4, 60, 2, 0.5, 3.0, seed=11)


@pytest.fixture(scope="session")
def ring():
    return gen_ood_ring(200, 2, 5.0, 6.0, seed=12, num_known_classes=4)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
