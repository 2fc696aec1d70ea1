"""Shared pytest hooks.

Acceptance tests append ``(criterion, passed, detail)`` to ``ACCEPTANCE_LINES``;
the lines are echoed in the terminal summary so they survive output capture.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda x: int(x[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name} {detail}")
