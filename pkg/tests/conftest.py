import pytest

from parkalloc.ingest import load_fixture
from parkalloc.permits import compute_permits

_criteria: list[tuple[str, str, str]] = []


@pytest.fixture(scope="session")
def ukzn():
    return load_fixture("ukzn_westville")


@pytest.fixture(scope="session")
def ukzn_permits(ukzn):
    return compute_permits(ukzn)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria.append((str(marker.args[0]), marker.args[1], "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, text, status in _criteria:
        terminalreporter.write_line(f"{status}  criterion {number:<3} {text}")
