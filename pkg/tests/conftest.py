import pytest

ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str = ""):
    """Log one acceptance line, then fail the calling test if ``ok`` is false."""
    ACCEPTANCE.append((criterion, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


@pytest.fixture
def accept():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {crit:<4} {detail}")
