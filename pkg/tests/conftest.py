import pytest

from hybridsizer.ingest import load_bundle
from hybridsizer.model import load_scenario

from helpers import HOSPITAL, RESOURCES

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def grid_only_cfg():
    return load_scenario(HOSPITAL / "scenario_grid_only.json")


@pytest.fixture(scope="session")
def bg_grid_cfg():
    return load_scenario(HOSPITAL / "scenario_bg_grid.json")


@pytest.fixture(scope="session")
def island_cfg():
    return load_scenario(HOSPITAL / "scenario_pv_bg_batt.json")


@pytest.fixture(scope="session")
def hospital_bundle(grid_only_cfg):
    return load_bundle(grid_only_cfg, RESOURCES)


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    n, title = marker
    prev = ACCEPTANCE.get(n, (title, True))
    ok = prev[1] and not report.failed
    ACCEPTANCE[n] = (title, ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        report.acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
