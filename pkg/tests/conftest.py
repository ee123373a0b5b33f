import pytest

from frontfix.model import GridSpec, MarketParams, initial_state
from frontfix.system import FrontFixSystem

NODIV = MarketParams(100.0, 0.05, 0.0, 0.2, 0.25)
DIV_A = MarketParams(100.0, 0.05, 0.03, 0.2, 0.5)
DIV_B = MarketParams(100.0, 0.07, 0.03, 0.4, 0.5)


@pytest.fixture
def nodiv():
    return NODIV


@pytest.fixture
def div_a():
    return DIV_A


@pytest.fixture
def div_b():
    return DIV_B


def make_system(params, h, **kw):
    grid = GridSpec.from_spacing(h, 3.0)
    return FrontFixSystem(params, grid, **kw), initial_state(params, grid)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
