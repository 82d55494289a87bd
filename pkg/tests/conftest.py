import pytest

# lines recorded by test_acceptance, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
