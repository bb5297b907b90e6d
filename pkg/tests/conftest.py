import pytest

from kswave.model import ModelParams

ACCEPTANCE_LINES = {}


@pytest.fixture
def base():
    """Reference parameter set used throughout the tests."""
    return ModelParams(chi=2.0, K=1.0, c=2.0, u_r=1.0, A=4.0, mu=1.0, eps=0.1)


@pytest.fixture
def record_acceptance():
    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
