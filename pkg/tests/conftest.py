import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
VERDICTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def verdict():
    """Record a criterion's outcome for the summary, then assert it."""

    def record(n: int, ok: bool, detail: str) -> None:
        VERDICTS[n] = (bool(ok), detail)
        assert ok, f"criterion {n}: {detail}"

    return record
