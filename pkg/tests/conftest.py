"""Shared test plumbing: the acceptance-criterion result registry.

Acceptance tests record one line per criterion here; the terminal-summary
hook prints them at the end of every run so the verdicts are visible
without -s regardless of capture settings.
"""

CRITERION_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> str:
    line = (
        f"criterion {number} ({name}): {'PASS' if passed else 'FAIL'} - {detail}"
    )
    CRITERION_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
