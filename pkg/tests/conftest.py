"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or "test_acceptance.py" not in report.nodeid:
        return
    n = int(m.group(1))
    failed = report.failed
    if report.when == "call" or failed:
        prev = _results.get(n, ("PASS", ""))
        status = "FAIL" if failed or prev[0] == "FAIL" else ("SKIP" if report.skipped else "PASS")
        _results[n] = (status, m.group(2).replace("_", " "))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, label = _results[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {label}")
