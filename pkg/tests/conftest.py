import sys
from pathlib import Path

import pytest

from kktcheck import ProblemSpec

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def circle():
    return ProblemSpec.from_strings(2, "x0 + x1", ["x0^2 + x1^2 - 2"])


def ball_max():
    return ProblemSpec.from_strings(2, "x0", [], ["x0^2 + x1^2 - 1"])


def halfspace():
    return ProblemSpec.from_strings(2, "x0^2 + x1^2", [], ["1 - x0"])


def orthant():
    return ProblemSpec.from_strings(2, "x0 + x1", [], ["-x0", "-x1"])


def circle_min_x1():
    return ProblemSpec.from_strings(2, "x1", ["x0^2 + x1^2 - 2"])


@pytest.fixture
def problems_dir():
    return PROBLEMS


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("tests.test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance.RESULTS):
        ok, line = acceptance.RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {line}")
