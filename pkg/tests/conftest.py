import numpy as np
import pytest

from hmfx.grids import RadialGrid, SphereGrid

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def loglog_slope(x, y, floor=1e-300):
    x = np.asarray(x, dtype=float)
    y = np.maximum(np.asarray(y, dtype=float), floor)
    A = np.vstack([np.log(x), np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    return float(coef[0])


@pytest.fixture(scope="session")
def small_radial():
    return RadialGrid.graded(10.0, 0.05)


@pytest.fixture(scope="session")
def small_sphere():
    return SphereGrid(12, 24)
