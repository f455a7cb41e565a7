import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for the acceptance summary.

    Call ``criterion(label, passed, detail)`` before asserting.
    """
    def record(label, passed, detail=""):
        _ACCEPTANCE[label] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].lstrip("AC"))):
        passed, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
