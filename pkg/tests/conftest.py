from functools import lru_cache

import pytest

from miw_coulomb.solver import SolverConfig, solve_configuration

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def solved(n, mode="standard"):
    return solve_configuration(n, SolverConfig(precision_mode=mode))


@pytest.fixture
def solve():
    return solved


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
