import json

import pytest

from conftest import CAMPAIGNS, DATA, SCENARIOS, WORKSHEETS, write_doc
from perception_hazop.cli import main
from perception_hazop.config import load_config
from perception_hazop.documents import DocumentError
from perception_hazop.model import model_to_dict
from perception_hazop.report import (
    WORKSHEET_CSV_COLUMNS, render_worksheet, worksheet_from_csv, worksheet_to_csv,
)
from perception_hazop.worksheet import USECASE_ELEMENTS, worksheet_from_dict

from test_coverage import _model


# ---------------------------------------------------------------------------
# renderers


def test_csv_header():
    assert ",".join(WORKSHEET_CSV_COLUMNS) == (
        "row_id,function,parameter,guideword,mode,deviation,hazard,situation,consequences,causes,dsrs,disposition"
    )


def test_csv_round_trip_drops_only_dsr_definitions(worksheets):
    for ws in worksheets.values():
        text = worksheet_to_csv(ws)
        assert text.splitlines()[0] == ",".join(WORKSHEET_CSV_COLUMNS)
        again = worksheet_from_csv(text, id=ws.id)
        assert again.entries == ws.entries
        assert worksheet_to_csv(again) == text


def test_bad_csv_reports_line():
    text = ",".join(WORKSHEET_CSV_COLUMNS) + "\nr1,f,p,Sooner,,,,,,,,\n"
    with pytest.raises(DocumentError) as info:
        worksheet_from_csv(text)
    assert info.value.line == 2


def test_markdown_lists_use_case_elements_in_order(worksheets, usecases):
    ws = worksheets["acc"]
    md = render_worksheet(ws, usecases, "md")
    uc = next(u for u in usecases if u.id == ws.usecase_id)
    assert f"## {uc.id}: {uc.title}" in md
    positions = [md.index(f"| {label} |") for _, label in USECASE_ELEMENTS]
    assert positions == sorted(positions)
    for e in ws.entries:
        assert f"| {e.row_id} |" in md
    assert render_worksheet(ws, usecases, "md") == md


def test_json_render_round_trips(worksheets):
    ws = worksheets["fcw"]
    doc = json.loads(render_worksheet(ws, fmt="json"))
    assert doc["schema_version"] == "1"
    assert worksheet_from_dict(doc["worksheet"]) == ws


# ---------------------------------------------------------------------------
# configuration


def test_config_nested_and_dotted(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"lateral": {"nominal_max": 2.5}, "controller.aeb_ttc": 1.2}))
    cfg = load_config(p)
    assert cfg.limits.nominal_max == 2.5 and cfg.limits.emergency_max == 5.0
    assert cfg.aeb_ttc == 1.2


@pytest.mark.parametrize("doc", [{"controller": {"bogus": 1}}, {"weather": 1},
                                 {"lateral": {"nominal_max": 6.0}}, {"lateral.nominal_max": True}])
def test_bad_config(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(DocumentError):
        load_config(p)


# ---------------------------------------------------------------------------
# command line


def _cli(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def test_coverage_exit_codes(tmp_path, capsys):
    model = write_doc(tmp_path / "m.json", "model", model_to_dict(_model(2)))
    stub = tmp_path / "stub.csv"
    rc, _, _ = _cli(capsys, "enumerate", model, "--format", "csv", "-o", stub)
    assert rc == 0
    lines = stub.read_text().splitlines()
    assert len(lines) == 21

    rc, out, _ = _cli(capsys, "coverage", model, stub)
    assert rc == 0

    short = tmp_path / "short.csv"
    short.write_text("\n".join(lines[:-1]) + "\n")
    rc, out, _ = _cli(capsys, "coverage", model, short, "--format", "json")
    assert rc == 2
    assert json.loads(out)["covered_fraction"] == pytest.approx(0.95)
    rc, _, _ = _cli(capsys, "coverage", model, short, "--fail-under", "0.95")
    assert rc == 0


def test_coverage_of_fixture_worksheets(capsys):
    rc, _, _ = _cli(capsys, "coverage", DATA / "model.json", *sorted(WORKSHEETS.glob("*.json")))
    assert rc == 0


def test_validate_all_fixtures(capsys):
    paths = [DATA / "model.json", DATA / "usecases.json", *sorted(WORKSHEETS.glob("*.json")),
             *sorted(SCENARIOS.glob("*.json")), CAMPAIGNS / "default.json"]
    rc, out, _ = _cli(capsys, "validate", *paths, "--rules", "reverse-needs-plausibility")
    assert rc == 0, out


def test_validate_reports_violations(tmp_path, capsys):
    row = {"row_id": "r", "function_id": "ACC 1.1", "parameter_id": "ACC 1.1.2", "guideword": "Reverse",
           "hazard": "negative gap", "consequences": "collision", "causes": ["noise"]}
    ws = write_doc(tmp_path / "w.json", "worksheet", {"id": "w", "entries": [row]})
    rc, out, _ = _cli(capsys, "validate", ws, "--model", DATA / "model.json",
                      "--rules", "reverse-needs-plausibility", "--format", "json")
    assert rc == 1
    rules = [v["rule"] for v in json.loads(out)[str(ws)]["violations"]]
    assert rules == ["reverse-needs-plausibility"]


def test_bad_json_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": "1",\n  "model": }\n')
    rc, _, err = _cli(capsys, "validate", bad)
    assert rc == 4
    assert f"{bad}:2:" in err


def test_worksheet_without_model_is_input_error(capsys):
    rc, _, err = _cli(capsys, "validate", WORKSHEETS / "acc.json")
    assert rc == 4 and "model" in err


def test_simulate_late_detection(tmp_path, capsys):
    inj = write_doc(tmp_path / "i.json", "injections",
                    [{"channel_id": "rdr_present", "guideword": "Late", "magnitude": {"dt": 1.2}}])
    trace = tmp_path / "t.csv"
    rc, out, _ = _cli(capsys, "simulate", SCENARIOS / "t_rdr_aeb_3.json", inj, "--trace", trace)
    assert rc == 0
    assert "classification: collision" in out.splitlines()
    assert trace.read_text().startswith("t,s,v,")


def test_simulate_seed_override(capsys):
    a = _cli(capsys, "simulate", SCENARIOS / "t_rdr_acc_2.json", "--format", "json")[1]
    b = _cli(capsys, "--seed", "99", "simulate", SCENARIOS / "t_rdr_acc_2.json", "--format", "json")[1]
    assert json.loads(a)["outcome_id"] != json.loads(b)["outcome_id"]


def test_simulate_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"controller": {"headway": 2.5}}))
    rc, out, _ = _cli(capsys, "--config", cfg, "simulate", SCENARIOS / "t_rdr_acc_2.json", "--format", "json")
    assert rc == 0
    assert json.loads(out)["min_gap"] == pytest.approx(2.5 * 20.0, abs=0.1)


def _campaign(tmp_path, rows, grid, scenarios=("t_rdr_acc_2", "t_rdr_fcw_4")):
    return write_doc(tmp_path / "c.json", "campaign", {
        "worksheet": str(WORKSHEETS / "acc.json"),
        "model": str(DATA / "model.json"),
        "scenarios": [str(SCENARIOS / f"{s}.json") for s in scenarios],
        "magnitude_grid": grid,
        "rows": rows,
    })


def test_campaign_discrepancies_exit_3(tmp_path, capsys):
    # a 30 % short range is absorbed in steady following
    spec = _campaign(tmp_path, ["ACC 1.1.2/Less"], {"Less": [{"delta": 0.3}]}, scenarios=["t_rdr_acc_2"])
    out_dir = tmp_path / "out"
    rc, _, _ = _cli(capsys, "campaign", spec, "--out", out_dir, "--jobs", "1")
    assert rc == 3
    disc = json.loads((out_dir / "discrepancies.json").read_text())["discrepancies"]
    assert [(d["row_id"], d["kind"]) for d in disc] == [("ACC 1.1.2/Less", "unevidenced-hazard")]


def test_campaign_evidenced_exit_0(tmp_path, capsys):
    spec = _campaign(tmp_path, ["ACC 1.1.2/NoOrNot"], {"NoOrNot": [{}]})
    rc, out, _ = _cli(capsys, "campaign", spec, "--jobs", "1", "--format", "json")
    assert rc == 0
    assert json.loads(out)["matrix"]["summary"] == {"ACC 1.1.2/NoOrNot": "collision"}


def test_report_markdown(tmp_path, capsys):
    out = tmp_path / "acc.md"
    rc, _, _ = _cli(capsys, "report", WORKSHEETS / "acc.json", "--usecases", DATA / "usecases.json", "-o", out)
    assert rc == 0
    assert out.read_text().startswith("# HAZOP worksheet")
