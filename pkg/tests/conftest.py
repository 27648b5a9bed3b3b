"""Shared pytest hooks: acceptance criteria summary lines."""

acceptance_lines: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number} ({name}): {status}"
    if detail:
        line += f" -- {detail}"
    acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria summary:")
        for line in sorted(acceptance_lines):
            terminalreporter.write_line(line)
