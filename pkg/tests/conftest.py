import pytest

ACCEPTANCE = []


@pytest.fixture
def record():
    """Store one acceptance line: (criterion, passed, detail, seconds)."""
    def _record(criterion, passed, detail, seconds):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail} ({seconds:.1f} s)"
        ACCEPTANCE.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
