"""Shared pytest plumbing: surfaces the acceptance-gate verdicts.

The acceptance tests record one pass/fail line per criterion through the
``verdict`` fixture; a terminal-summary hook prints them so they stay
visible even though pytest captures stdio during the tests themselves.
"""
import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def _record(number: int, description: str, ok: bool) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {description}"
        _VERDICTS.append(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance gate")
    for line in sorted(_VERDICTS, key=_criterion_number):
        terminalreporter.write_line(line)


def _criterion_number(line: str) -> int:
    return int(line.split("criterion")[1].split(":")[0])
