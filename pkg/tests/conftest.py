import math

import pytest

from bihat.grid import PeriodicGrid


@pytest.fixture
def grid1():
    return PeriodicGrid(1, 128, 2 * math.pi)


@pytest.fixture
def grid2():
    return PeriodicGrid(2, 32, 2 * math.pi)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
