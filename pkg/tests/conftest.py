import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    def record(name, passed, detail=""):
        _VERDICTS.append((name, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
