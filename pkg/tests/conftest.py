import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tdcomm.tdnet import TemporalGraph  # noqa: E402

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "failed": []})
    if report.failed:
        entry["passed"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = "PASS" if e["passed"] else "FAIL"
        extra = "" if e["passed"] else f"  ({', '.join(e['failed'])})"
        terminalreporter.write_line(f"[{status}] {number:2d}. {e['title']}{extra}")


@pytest.fixture
def barbell():
    return TemporalGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)])


@pytest.fixture
def cycle4():
    return TemporalGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def two_triangles():
    return TemporalGraph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
