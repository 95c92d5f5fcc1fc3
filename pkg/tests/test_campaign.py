import json
from dataclasses import replace
from pathlib import Path

import pytest

from conftest import CAMPAIGNS, DATA, scenario
from perception_hazop.campaign import (
    AmbiguousBinding, DiscrepancyReport, OutcomeMatrix, RunRecord, bind_parameters, campaign_from_dict,
    evidence_check, load_campaign, plan_runs, run_campaign, run_seed,
)
from perception_hazop.documents import DocumentError
from perception_hazop.errors import RejectedInput
from perception_hazop.model import Guideword
from perception_hazop.sim import STANDARD_CHANNELS, SensorChannel, SimOutcome, TrackerConfig, supports
from perception_hazop.worksheet import HazopEntry, Worksheet, load_worksheet


def test_binding_by_quantity(model):
    b = bind_parameters(model, STANDARD_CHANNELS)
    assert b.bound["ACC 1.1.2"] == "rdr_range"
    assert b.bound["ACC 1.1.1"] == "rdr_relvel"
    assert b.bound["ALC 1.1.1"] == "cam_lane_offset"
    assert "FCW 0.2.5" in b.unbound
    assert "FCW 0.2.5" not in b.bound


def test_ambiguous_binding(model):
    channels = STANDARD_CHANNELS + (SensorChannel("lidar_range", "lidar", "target_range"),)
    with pytest.raises(AmbiguousBinding, match="rdr_range and lidar_range"):
        bind_parameters(model, channels)
    overrides = {p: "lidar_range" for p in ("ACC 1.1.2", "ACC 1.2.1", "AEB 1.1.1", "FCW 0.1.1")}
    assert bind_parameters(model, channels, overrides).bound["ACC 1.1.2"] == "lidar_range"


def test_override_must_match_quantity(model):
    with pytest.raises(RejectedInput, match="carries"):
        bind_parameters(model, STANDARD_CHANNELS, {"ACC 1.1.2": "rdr_relvel"})


def _spec(**kw):
    doc = {
        "worksheet": "../worksheets/acc.json",
        "model": "../model.json",
        "scenarios": ["../scenarios/t_rdr_acc_2.json", "../scenarios/t_rdr_fcw_4.json"],
        "magnitude_grid": {"More": [{"delta": 0.3}, {"delta": 0.6}], "Late": [{"dt": 0.5}]},
        "tracker_variants": [{}, {"discard_history_on_reclass": True}],
    }
    doc.update(kw)
    return campaign_from_dict(doc, base_dir=CAMPAIGNS)


def _plan(spec, model, ws, salt=None):
    scenarios = [scenario(Path(r).stem) for r in spec.scenario_refs]
    return plan_runs(spec, model, ws, scenarios, salt=salt)


def test_run_count_formula(model, worksheets):
    ws = worksheets["acc"]
    spec = _spec()
    tasks, rows, unsimulated = _plan(spec, model, ws)
    binding = bind_parameters(model, STANDARD_CHANNELS)
    expected = 0
    for e in ws.entries:
        if e.disposition.kind != "analysed":
            continue
        ch = binding.bound.get(e.parameter_id)
        if ch is None:
            continue
        quantity = next(c.quantity for c in STANDARD_CHANNELS if c.id == ch)
        if supports(e.guideword, quantity):
            expected += len(spec.grid_for(e.guideword)) * len(spec.tracker_variants) * len(spec.scenario_refs)
    assert len(tasks) == expected > 0
    assert len({t.key for t in tasks}) == len(tasks)


def test_only_analysed_rows_are_planned(model, worksheets):
    ws = worksheets["acc"]
    tasks, rows, unsimulated = _plan(_spec(), model, ws)
    skipped = {e.row_id for e in ws.entries if e.disposition.kind != "analysed"}
    assert skipped and not skipped & set(rows) and not skipped & set(unsimulated)
    assert not skipped & {t.row_id for t in tasks}


def test_row_filter(model, worksheets):
    tasks, rows, _ = _plan(_spec(rows=["ACC 1.1.2/More"]), model, worksheets["acc"])
    assert rows == ["ACC 1.1.2/More"]
    assert len(tasks) == 2 * 2 * 2


def test_grid_window_outside_scenario_is_rejected(model, worksheets):
    spec = _spec(magnitude_grid={"NoOrNot": [{"window": [1.0, 500.0]}]}, rows=["ACC 1.1.2/NoOrNot"])
    with pytest.raises(RejectedInput, match="ACC 1.1.2/NoOrNot"):
        _plan(spec, model, worksheets["acc"])


def test_seed_is_content_hash():
    v = TrackerConfig()
    a = run_seed("r", "S", {"dt": 0.5}, v)
    assert a == run_seed("r", "S", {"dt": 0.5}, v)
    assert 0 <= a < 2 ** 64
    assert a != run_seed("r", "S", {"dt": 0.6}, v)
    assert a != run_seed("r", "S", {"dt": 0.5}, v, salt=1)
    assert run_seed("r", "S", {"dt": 0.5}, v, salt=1) != run_seed("r", "S", {"dt": 0.5}, v, salt=2)


def test_salt_changes_every_run_seed(model, worksheets):
    plain, _, _ = _plan(_spec(), model, worksheets["acc"])
    salted, _, _ = _plan(_spec(), model, worksheets["acc"], salt=7)
    assert all(a.scenario.seed != b.scenario.seed for a, b in zip(plain, salted))
    # run identity does not depend on the salt
    assert [t.key for t in plain] == [t.key for t in salted]


def test_bad_campaign_document():
    with pytest.raises(DocumentError):
        campaign_from_dict({"worksheet": "w", "model": "m", "scenarios": []})
    with pytest.raises(DocumentError):
        _spec(magnitude_grid={"Sooner": [{}]})
    with pytest.raises(DocumentError):
        _spec(magnitude_grid={"More": [{"delta": 99}]})


SMALL_ROWS = ["ACC 1.1.2/More", "ACC 1.1.2/NoOrNot", "ACC 1.1.1/Reverse"]


@pytest.fixture(scope="module")
def small_matrix():
    spec = _spec(rows=SMALL_ROWS, magnitude_grid={"More": [{"delta": 0.6}], "NoOrNot": [{}]},
                 tracker_variants=[{}])
    return spec, run_campaign(spec)


def test_matrix_shape(small_matrix):
    spec, m = small_matrix
    assert sorted(m.rows) == sorted(SMALL_ROWS)
    assert m.n_runs == 3 * 2
    for rid, keys in m.rows.items():
        assert keys == sorted(keys)
        assert all(m.outcomes[k].row_id == rid for k in keys)
    # range dropout over the whole run is a collision in the warning scenario
    assert m.summary["ACC 1.1.2/NoOrNot"] == "collision"


def test_scenario_order_does_not_matter(small_matrix):
    spec, m = small_matrix
    flipped = replace(spec, scenario_refs=tuple(reversed(spec.scenario_refs)))
    assert run_campaign(flipped).to_dict() == m.to_dict()


def test_matrix_round_trip(small_matrix, tmp_path):
    spec, m = small_matrix
    assert OutcomeMatrix.from_dict(json.loads(json.dumps(m.to_dict()))) == m
    report = evidence_check(m, load_worksheet(spec.resolve(spec.worksheet_ref)))
    assert DiscrepancyReport.from_dict(json.loads(json.dumps(report.to_dict()))) == report


def test_outputs_written(tmp_path):
    spec = _spec(rows=["ACC 1.1.2/More"], magnitude_grid={"More": [{"delta": 0.3}]}, tracker_variants=[{}])
    m = run_campaign(spec, out_dir=tmp_path, traces=True)
    assert (tmp_path / "matrix.json").exists()
    assert (tmp_path / "summary.csv").read_text().splitlines()[0] == "row_id,worst_classification,n_runs,n_failures"
    assert len(list((tmp_path / "traces").glob("*.csv"))) == m.n_runs == 2


def _record(rid, cls):
    out = SimOutcome(f"{rid}-{cls}", cls, None, 10.0, 0.0, 0.0, 0)
    return RunRecord(rid, "S", "More", "rdr_range", {}, {}, False, 1, out)


def test_evidence_check_kinds():
    rows = {
        "claimed-ok": ["a"],          # hazard claimed, nothing failed
        "claimed-fail": ["b"],        # hazard claimed and shown
        "silent-fail": ["c", "d"],    # no hazard written, a run failed
        "silent-ok": ["e"],
    }
    recs = {"a": _record("claimed-ok", "success"), "b": _record("claimed-fail", "collision"),
            "c": _record("silent-fail", "success"), "d": _record("silent-fail", "missed_warning"),
            "e": _record("silent-ok", "success")}
    matrix = OutcomeMatrix(rows, {}, (), {}, recs)
    entries = tuple(
        HazopEntry(rid, "ACC 1.1", "ACC 1.1.2", Guideword.More,
                   hazard="h" if rid.startswith("claimed") else "", causes=("c",))
        for rid in rows
    )
    report = evidence_check(matrix, Worksheet("w", entries))
    assert [(d.row_id, d.kind) for d in report.items] == [
        ("claimed-ok", "unevidenced-hazard"),
        ("silent-fail", "unclaimed-hazard"),
    ]
    assert "missed_warning" in report.items[1].detail


def test_default_campaign_loads():
    spec = load_campaign(CAMPAIGNS / "default.json")
    assert spec.resolve(spec.model_ref).resolve() == (DATA / "model.json").resolve()
