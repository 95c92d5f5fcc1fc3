import json
from pathlib import Path

import pytest

import perception_hazop
from perception_hazop.model import load_model
from perception_hazop.sim import load_scenario
from perception_hazop.worksheet import load_usecases, load_worksheet

DATA = Path(perception_hazop.__file__).parent / "data"
SCENARIOS = DATA / "scenarios"
WORKSHEETS = DATA / "worksheets"
CAMPAIGNS = DATA / "campaigns"


@pytest.fixture(scope="session")
def model():
    return load_model(DATA / "model.json")


@pytest.fixture(scope="session")
def usecases():
    return load_usecases(DATA / "usecases.json")


@pytest.fixture(scope="session")
def worksheets():
    return {p.stem: load_worksheet(p) for p in sorted(WORKSHEETS.glob("*.json"))}


def scenario(name):
    return load_scenario(SCENARIOS / f"{name}.json")


def write_doc(path, kind, payload):
    path.write_text(json.dumps({"schema_version": "1", kind: payload}), encoding="utf-8")
    return path


# acceptance criteria report: one line per criterion at the end of the run
_criteria = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    name = props.get("criterion")
    if name is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[name] = "PASS" if report.outcome == "passed" else report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split()[0][2:])):
        terminalreporter.write_line(f"{_criteria[name]:<6} {name}")
