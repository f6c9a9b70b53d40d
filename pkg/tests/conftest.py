import datetime as dt

import numpy as np
import pytest

from rtsurv.core import discretize_generation_interval

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def default_gi():
    return discretize_generation_interval(6.5, 0.62, 1e-4)


@pytest.fixture
def rng():
    return np.random.default_rng(20200520)


@pytest.fixture(scope="session")
def study_start():
    return dt.date(2020, 5, 20)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
