import numpy as np
import pytest

from qftsim.core import traceless_part
from qftsim.nmr import alanine


@pytest.fixture(scope="session")
def ala():
    return alanine()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_deviation(rng, n):
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return traceless_part(a + a.conj().T)


def random_unitary(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / abs(np.diag(r)))


ACCEPTANCE_RESULTS = {}


def pytest_runtest_makereport(item, call):
    crit = item.get_closest_marker("criterion")
    if crit is None or call.when != "call":
        return
    num, title = crit.args
    status = "PASS" if call.excinfo is None else "FAIL"
    ACCEPTANCE_RESULTS[num] = f"{status}  criterion {num:>2}: {title}"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])
