"""Shared fixtures plus the acceptance-summary hook.

Acceptance tests register themselves in RESULTS before asserting anything
and confirm on their last line, so a crash mid-test still shows up as FAIL
in the summary block printed after the run.
"""
from __future__ import annotations

RESULTS: dict[int, tuple[str, str]] = {}


def register(number: int, description: str) -> None:
    RESULTS[number] = (description, "FAIL")


def confirm(number: int) -> None:
    RESULTS[number] = (RESULTS[number][0], "PASS")


def mark_skipped(number: int, description: str) -> None:
    RESULTS[number] = (description, "SKIP")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        description, status = RESULTS[number]
        terminalreporter.write_line(f"ACCEPTANCE {number}: {status} - {description}")
