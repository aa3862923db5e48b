import os
import sys
from pathlib import Path

import pytest

from indefsl.coefficients import load_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
ACCEPTANCE_LINES: list[str] = []


def problem(name: str):
    return load_problem(PROBLEMS / f"{name}.json")


@pytest.fixture(scope="session")
def problems():
    return problem


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
