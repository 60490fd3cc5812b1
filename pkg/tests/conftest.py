from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def dorabella_text():
    return (FIXTURES / "dorabella.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def published_melody_text():
    return (FIXTURES / "published_melody.txt").read_text(encoding="utf-8")


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    callspec = getattr(item, "callspec", None)
    if callspec is not None:
        title = f"{title} [{callspec.id}]"
    failed = report.failed
    skipped = report.skipped
    if call.when == "call" or failed or skipped:
        previous = _criteria.get(item.nodeid)
        if previous is None or previous[2] == "PASS":
            status = "FAIL" if failed else "SKIP" if skipped else "PASS"
            _criteria[item.nodeid] = (number, title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_criteria.values(), key=lambda r: (r[0], r[1])):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
