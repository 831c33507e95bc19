"""Collects acceptance verdicts and prints them after the test summary."""

import re

VERDICTS: dict[str, str] = {}


def record(criterion, passed: bool, detail: str, hard: bool = True) -> None:
    verdict = ("PASS" if passed else "FAIL") if hard else ("PASS" if passed else "NOTE")
    VERDICTS[str(criterion)] = f"ACCEPTANCE {criterion}: {verdict} {detail}"


def _order(key: str):
    m = re.match(r"(\d+)(.*)", key)
    return int(m.group(1)), m.group(2)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS, key=_order):
        terminalreporter.write_line(VERDICTS[key])
