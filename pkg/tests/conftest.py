import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from tilingk.subst import bundled_system, collared_system

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

DATA = Path(__file__).resolve().parent.parent / "src" / "tilingk" / "data"


@pytest.fixture(scope="session")
def chair():
    return bundled_system("chair")


@pytest.fixture(scope="session")
def arrow():
    return bundled_system("arrow_chair")


@pytest.fixture(scope="session")
def collared_arrow(arrow):
    return collared_system(arrow)


@pytest.fixture(scope="session")
def trivial():
    return bundled_system("trivial")


@pytest.fixture(scope="session")
def expected():
    return json.loads((DATA / "chair.expected.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def chair_report(chair, expected):
    from tilingk.ktheory import chair_pipeline

    return chair_pipeline(chair, expected=expected)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


# -- acceptance bookkeeping ----------------------------------------------------

PROPERTY_RESULTS: dict[str, bool] = {}
_CRITERIA: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "property: randomized property test counted by acceptance criterion 11")


def pytest_collection_modifyitems(items):
    # criterion 11 reads the property-test outcomes, so it runs after them
    last = [i for i in items if i.name.startswith("test_criterion_11")]
    items[:] = [i for i in items if i not in last] + last


def pytest_runtest_logreport(report):
    if report.when == "call" and "property" in report.keywords:
        PROPERTY_RESULTS[report.nodeid.split("::")[-1]] = report.passed
    if "test_criterion_" in report.nodeid and (report.when == "call" or report.failed):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _CRITERIA:
            _CRITERIA[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        num = int(name.split("_")[2])
        terminalreporter.write_line(f"criterion {num:2d}: {_CRITERIA[name]}  ({name})")
