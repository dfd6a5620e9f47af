import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion, then assert it."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("-", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
