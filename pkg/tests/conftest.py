"""Collects one-line verdicts from the whole-system tests.

pytest captures stdout of passing tests, so the acceptance checks push their
summary lines here and a terminal-summary hook replays them after the run.
"""

SUMMARY: list[str] = []


def record(line: str) -> None:
    SUMMARY.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if SUMMARY:
        terminalreporter.section("acceptance summary")
        for line in SUMMARY:
            terminalreporter.write_line(line)
