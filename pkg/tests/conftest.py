import os
import tempfile

import pytest

ACCEPTANCE_LINES: list[str] = []

# keep test runs away from the user's coset cache
os.environ.setdefault("SP4VERIFY_CACHE", tempfile.mkdtemp(prefix="sp4verify-test-cache-"))


@pytest.fixture
def criterion():
    def record(label: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  {label:<58} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
