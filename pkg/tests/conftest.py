"""Shared test plumbing: the acceptance suite's verdict report."""

# one "[PASS]/[FAIL] n. label (t)" line per acceptance criterion
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
