import pytest

from avxdvfs.model import FLAT16, GOLD6130, GOLD6130_MEASURED, I9_7940X
from avxdvfs.simengine import SimConfig, TimeoutMode

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def i9_wall():
    return SimConfig(I9_7940X, FLAT16)


@pytest.fixture
def i9_trace():
    return SimConfig(I9_7940X, FLAT16, timeout_mode=TimeoutMode.TRACE_TIME)


@pytest.fixture
def gold5():
    return SimConfig(GOLD6130, GOLD6130_MEASURED, active_cores=5)
