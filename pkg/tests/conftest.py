import numpy as np
import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log():
    """Records ``criterion -> (passed, detail)``; printed at the end of the run."""
    def record(number, title, passed, detail):
        ACCEPTANCE_LINES[number] = (title, bool(passed), detail)
        print(_line(number, title, passed, detail))
    return record


def _line(number, title, passed, detail):
    return f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(_line(number, *ACCEPTANCE_LINES[number]))
