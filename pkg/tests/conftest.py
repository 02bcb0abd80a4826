import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion.

    The line is printed immediately (visible on failure or with -s) and
    echoed in a terminal summary section so a plain ``pytest -v`` run shows
    every criterion verdict.
    """

    def emit(number: int, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
