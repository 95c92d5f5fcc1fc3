"""Command-line interface.

Exit status: 0 ok, 1 validation violations, 2 coverage below threshold,
3 campaign discrepancies, 4 unreadable or invalid input. When several
apply the highest wins.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .campaign import evidence_check, load_campaign, run_campaign
from .config import load_config
from .coverage import check_coverage, enumerate_cells
from .documents import dumps, load_document, make_document
from .errors import DocumentError, RejectedInput
from .model import ValidationReport, load_model, model_from_dict, validate_model
from .report import (
    render_campaign,
    render_coverage,
    render_outcome,
    render_validation,
    render_worksheet,
    stub_worksheet,
    worksheet_from_csv,
)
from .sim import ControllerConfig, TrackerConfig, load_injections, load_scenario, run, scenario_from_dict
from .sim.scenario import injection_from_dict
from .worksheet import (
    RuleSet,
    Worksheet,
    lint_worksheet,
    load_usecases,
    usecase_from_dict,
    validate_usecases,
    worksheet_from_dict,
    worksheet_to_dict,
)

OK, VIOLATIONS, COVERAGE_GAP, DISCREPANCIES, BAD_INPUT = 0, 1, 2, 3, 4


def _csv_list(text: Optional[str]) -> Optional[list[str]]:
    if text is None:
        return None
    return [x.strip() for x in text.split(",") if x.strip()]


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("fraction must lie in [0, 1]")
    return value


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def load_any_worksheet(path) -> Worksheet:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DocumentError(f"cannot read file: {exc.strerror or exc}", path=path) from exc
        return worksheet_from_csv(text, id=path.stem, path=path)
    _, payload = load_document(path, expected="worksheet")
    return worksheet_from_dict(payload, path=path)


def _controller_config(args) -> ControllerConfig:
    return load_config(args.config) if args.config else ControllerConfig()


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    rules = RuleSet.parse(args.rules)
    docs = []
    for p in args.paths:
        if Path(p).suffix.lower() == ".csv":
            docs.append((p, "worksheet", None))
        else:
            kind, payload = load_document(p)
            docs.append((p, kind, payload))

    model = load_model(args.model) if args.model else None
    for p, kind, payload in docs:
        if kind == "model" and model is None:
            model = model_from_dict(payload, path=p)

    results = []
    for p, kind, payload in docs:
        if kind == "model":
            report = validate_model(model_from_dict(payload, path=p))
        elif kind == "usecases":
            if not isinstance(payload, list):
                raise DocumentError("expected a list of use cases", path=p, pointer="/usecases")
            report = validate_usecases(usecase_from_dict(u, f"/usecases/{i}", p) for i, u in enumerate(payload))
        elif kind == "worksheet":
            if model is None:
                raise RejectedInput(f"{p}: worksheet lint needs a model (pass --model or a model document)")
            ws = load_any_worksheet(p) if payload is None else worksheet_from_dict(payload, path=p)
            report = lint_worksheet(ws, model, rules)
        elif kind == "scenario":
            scenario_from_dict(payload, path=p).validate()
            report = ValidationReport()
        elif kind == "injections":
            if not isinstance(payload, list):
                raise DocumentError("expected a list of injections", path=p, pointer="/injections")
            for i, x in enumerate(payload):
                injection_from_dict(x, f"/injections/{i}", p).params()
            report = ValidationReport()
        else:  # campaign
            load_campaign(p)
            report = ValidationReport()
        results.append((p, report))

    if args.format == "json":
        sys.stdout.write(dumps({str(p): r.to_dict() for p, r in results}))
    else:
        for p, r in results:
            sys.stdout.write(render_validation(r, "text", label=str(p)))
    return VIOLATIONS if any(not r.ok for _, r in results) else OK


def cmd_enumerate(args) -> int:
    model = load_model(args.model)
    cells = enumerate_cells(model, _csv_list(args.capabilities), _csv_list(args.modes))
    ws = stub_worksheet(model, cells, id=args.id)
    if args.format == "csv":
        text = render_worksheet(ws, fmt="csv")
    else:
        text = dumps(make_document("worksheet", worksheet_to_dict(ws)))
    _write(text, args.output)
    return OK


def cmd_coverage(args) -> int:
    model = load_model(args.model)
    ws = Worksheet.combine(load_any_worksheet(p) for p in args.worksheets)
    cells = enumerate_cells(model, _csv_list(args.capabilities), _csv_list(args.modes))
    report = check_coverage(cells, ws.entries)
    sys.stdout.write(render_coverage(report, args.format))
    return COVERAGE_GAP if report.covered_fraction < args.fail_under else OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    injections = load_injections(args.injections) if args.injections else []
    tracker = TrackerConfig(args.tracker_discard, args.history_horizon)
    outcome = run(scenario, injections, tracker, args.monitor, _controller_config(args), trace_path=args.trace)
    sys.stdout.write(render_outcome(outcome, args.format))
    return OK


def cmd_campaign(args) -> int:
    spec = load_campaign(args.spec)
    if args.monitor is not None:
        spec = replace(spec, monitor_enabled=args.monitor)
    matrix = run_campaign(spec, _controller_config(args), jobs=args.jobs, out_dir=args.out,
                          traces=args.traces, seed=args.seed)
    worksheet = load_any_worksheet(spec.resolve(spec.worksheet_ref))
    discrepancies = evidence_check(matrix, worksheet)
    text = render_campaign(matrix, discrepancies, args.format)
    sys.stdout.write(text)
    if args.out:
        Path(args.out, "discrepancies.json").write_bytes(dumps(discrepancies.to_dict()).encode("utf-8"))
    return DISCREPANCIES if discrepancies else OK


def cmd_report(args) -> int:
    ws = load_any_worksheet(args.worksheet)
    usecases = load_usecases(args.usecases) if args.usecases else []
    _write(render_worksheet(ws, usecases, args.format), args.output)
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perception-hazop",
        description="HAZOP worksheets for perception failures, with coverage checks and fault-injection simulation.",
    )
    parser.add_argument("--config", help="JSON file with lateral limits and controller settings")
    parser.add_argument("--seed", type=_u64, help="override the scenario seed (simulate) or salt run seeds (campaign)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate model, use-case, worksheet, scenario or campaign documents")
    p.add_argument("paths", nargs="+")
    p.add_argument("--model", help="model used to lint worksheets")
    p.add_argument("--rules", help="comma-separated optional lint rules, e.g. reverse-needs-plausibility")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("enumerate", help="write a stub worksheet with one row per deviation cell")
    p.add_argument("model")
    p.add_argument("--capabilities", help="comma-separated capability ids (default: all)")
    p.add_argument("--modes", help="comma-separated operating modes")
    p.add_argument("--id", default="stub", help="worksheet id")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("coverage", help="check worksheet rows against the enumerated cells")
    p.add_argument("model")
    p.add_argument("worksheets", nargs="+")
    p.add_argument("--capabilities")
    p.add_argument("--modes")
    p.add_argument("--fail-under", type=_fraction, default=1.0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("simulate", help="run one scenario with optional injections")
    p.add_argument("scenario")
    p.add_argument("injections", nargs="?")
    p.add_argument("--monitor", action="store_true", help="enable the plausibility monitor")
    p.add_argument("--tracker-discard", action="store_true", help="discard track history on reclassification")
    p.add_argument("--history-horizon", type=float, default=2.0)
    p.add_argument("--trace", help="write the per-step CSV trace here")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="run a campaign and check evidence against the worksheet")
    p.add_argument("spec")
    p.add_argument("--out", help="directory for matrix.json, summary.csv and traces")
    p.add_argument("--traces", action="store_true", help="also write one trace CSV per run")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: number of processors)")
    mon = p.add_mutually_exclusive_group()
    mon.add_argument("--monitor", dest="monitor", action="store_true", default=None)
    mon.add_argument("--no-monitor", dest="monitor", action="store_false")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", help="render a worksheet with its use case")
    p.add_argument("worksheet")
    p.add_argument("--usecases")
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except (RejectedInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
