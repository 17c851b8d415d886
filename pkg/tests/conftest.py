import pytest

RESULTS = []


@pytest.fixture
def record():
    """Store one acceptance line ``(number, title, passed, detail)``."""
    def _record(number, title, passed, detail=""):
        RESULTS.append((number, title, bool(passed), detail))
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(RESULTS):
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}")
