"""Shared pytest hooks: one summary line per acceptance criterion."""
from __future__ import annotations

import pytest

_ACCEPTANCE: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    k = int(marker.args[0])
    ok = report.passed if report.when == "call" else not report.failed
    if report.when == "call" or not ok:
        _ACCEPTANCE[k] = _ACCEPTANCE.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"ACCEPTANCE {k}: {'PASS' if _ACCEPTANCE[k] else 'FAIL'}")
