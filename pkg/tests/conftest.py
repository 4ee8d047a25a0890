import numpy as np
import pytest

from hwm.grid import make_grid

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def torus256():
    return make_grid("torus", 256)


def trig_poly(rng, x, degree, mean=True):
    """Random real trigonometric polynomial of the given degree."""
    c = rng.normal(size=(degree + 1, 2))
    out = np.full(x.shape, c[0, 0] if mean else 0.0)
    for k in range(1, degree + 1):
        out += c[k, 0] * np.cos(k * x) + c[k, 1] * np.sin(k * x)
    return out
