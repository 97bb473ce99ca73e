import numpy as np
import pytest

from foschlab.grid import make_grid

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid1():
    return make_grid(1, 256, 16.0)


@pytest.fixture
def grid2():
    return make_grid(2, 32, 4.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
