"""Shared pytest hooks.

The acceptance tests register one result line each; echoing them in the
terminal summary keeps the pass/fail verdicts visible without -s.
"""

CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
