import numpy as np
import pytest

from wavegroup.forest import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_regression(rng):
    """Y depends on the first two of five uniform features."""
    n = 300
    X = rng.uniform(size=(n, 5))
    y = 3.0 * X[:, 0] + np.where(X[:, 1] > 0.5, 2.0, 0.0) + 0.1 * rng.normal(size=n)
    return Dataset(X, y, [f"x{i}" for i in range(5)])


ACCEPTANCE_RESULTS = {}


def record_criterion(number, passed, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE_RESULTS[number] = (passed, detail)
    print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")
