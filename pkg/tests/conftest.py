import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from twodisk import axis_config

settings.register_profile(
    "default", deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sym_cfg():
    return axis_config(1.0, 1.0, 0.0156)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def central_diff(f, x, h=1e-5):
    """Gradient of a scalar field by central differences, x of shape (N, 2)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        out[:, i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
