import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for an acceptance criterion and echo it."""

    def record(number, title, checks):
        failed = [name for name, ok in checks.items() if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"criterion {number} {verdict}: {title}"
        if failed:
            line += f" (failing: {'; '.join(failed)})"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return failed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
