import numpy as np
import pytest

from ptfm.lp_core import LpInstance, PrimalDualPoint
from ptfm.target import FullState, TargetPoint


def r1_instance():
    return LpInstance(np.array([[1.0, 1.0]]), np.array([2.0]), np.array([1.0, 2.0]))


def r1_start():
    return PrimalDualPoint(np.array([1.0, 1.0]), np.array([1.0, 2.0]), np.array([0.0]))


@pytest.fixture
def r1():
    return r1_instance()


@pytest.fixture
def u0():
    return r1_start()


@pytest.fixture
def z0():
    return FullState(r1_start(), TargetPoint(4.0, np.array([0.0, 1.0])))


def random_instance(rng, m, n):
    """Generator-style instance with a known strictly feasible point."""
    x = rng.uniform(0.05, 1.0, n)
    s = rng.uniform(0.05, 1.0, n)
    A = rng.uniform(-1.0, 1.0, (m, n))
    return LpInstance(A, A @ x, s), PrimalDualPoint(x, s, np.zeros(m))


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
