import pytest

from pcsi.samples import test_pattern

_acceptance_lines = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance check."""
    def _report(name, ok, detail=""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok
    return _report


@pytest.fixture(scope="session")
def pattern64():
    return test_pattern(64, 64)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
