"""Prints one PASS/FAIL line per acceptance criterion after the run.

Tests opt in with ``@pytest.mark.criterion("2a", "short description")`` and
may attach measured values with ``record_property("detail", text)`` before
asserting.
"""
import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion reported in the summary")
    config.stash[_KEY] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # failures in setup count too; a passing setup is reported with the call phase
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        item.config.stash[_KEY].append((marker.args[0], marker.args[1], status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for cid, title, status, detail in sorted(rows, key=lambda r: r[0]):
        line = f"{status} [{cid}] {title}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)
