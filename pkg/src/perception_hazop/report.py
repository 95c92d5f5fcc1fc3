"""Renderers for worksheets, use cases, coverage, validation and simulation results.

All renderers return text with LF line endings and no timestamps, so the
same inputs always give the same bytes.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, Sequence

from .coverage import CoverageReport, DeviationCell
from .documents import DocumentError, dumps, make_document
from .model import Guideword, SystemModel, ValidationReport
from .worksheet import (
    ANALYSED,
    USECASE_ELEMENTS,
    Disposition,
    HazopEntry,
    UseCase,
    Worksheet,
    worksheet_to_dict,
)

WORKSHEET_CSV_COLUMNS = (
    "row_id", "function", "parameter", "guideword", "mode", "deviation", "hazard",
    "situation", "consequences", "causes", "dsrs", "disposition",
)
LIST_SEP = "; "


def _md_cell(text) -> str:
    return str(text or "").replace("|", "\\|").replace("\n", " ")


# ---------------------------------------------------------------------------
# worksheets


def worksheet_to_csv(ws: Worksheet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(WORKSHEET_CSV_COLUMNS)
    for e in ws.entries:
        w.writerow([
            e.row_id, e.function_id, e.parameter_id, e.guideword.name, e.mode or "",
            e.deviation, e.hazard or "", e.situation, e.consequences or "",
            LIST_SEP.join(e.causes), LIST_SEP.join(e.dsrs), str(e.disposition),
        ])
    return buf.getvalue()


def worksheet_from_csv(text: str, id: str = "worksheet", path=None) -> Worksheet:
    """Parse the CSV interchange form. DSR definitions do not travel in CSV."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DocumentError("empty CSV", path=path, line=1, column=1) from None
    if tuple(header) != WORKSHEET_CSV_COLUMNS:
        raise DocumentError(f"expected columns {','.join(WORKSHEET_CSV_COLUMNS)}", path=path, line=1, column=1)

    def split(s):
        return tuple(x.strip() for x in s.split(";") if x.strip())

    entries = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(WORKSHEET_CSV_COLUMNS):
            raise DocumentError(f"expected {len(WORKSHEET_CSV_COLUMNS)} fields, got {len(row)}",
                                path=path, line=lineno, column=1)
        d = dict(zip(WORKSHEET_CSV_COLUMNS, row))
        try:
            gw = Guideword.parse(d["guideword"])
            disp = Disposition.parse(d["disposition"] or "analysed")
        except ValueError as exc:
            raise DocumentError(str(exc), path=path, line=lineno, column=1) from None
        entries.append(HazopEntry(
            row_id=d["row_id"], function_id=d["function"], parameter_id=d["parameter"], guideword=gw,
            mode=d["mode"] or None, deviation=d["deviation"], hazard=d["hazard"] or None,
            situation=d["situation"], consequences=d["consequences"] or None,
            causes=split(d["causes"]), dsrs=split(d["dsrs"]), disposition=disp,
        ))
    return Worksheet(id=id, entries=tuple(entries))


def usecase_to_markdown(uc: UseCase) -> str:
    out = [f"## {uc.id}: {uc.title}", "", "| Element | Content |", "|---|---|"]
    for attr, label in USECASE_ELEMENTS:
        value = getattr(uc, attr)
        if attr in ("description", "extension"):
            text = "<br>".join(f"{s.index}. {_md_cell(s.action)}" for s in value)
        elif isinstance(value, tuple):
            text = "<br>".join(_md_cell(v) for v in value)
        else:
            text = _md_cell(value)
        out.append(f"| {label} | {text} |")
    return "\n".join(out) + "\n"


def worksheet_to_markdown(ws: Worksheet, usecases: Sequence[UseCase] = ()) -> str:
    parts = [f"# HAZOP worksheet {ws.id}", ""]
    relevant = [u for u in usecases if ws.usecase_id is None or u.id == ws.usecase_id]
    for uc in relevant:
        parts.append(usecase_to_markdown(uc))
    header = ["Row", "Function", "Parameter", "Guideword", "Mode", "Deviation", "Hazard",
              "Situation", "Consequences", "Causes", "DSRs", "Disposition"]
    parts.append("| " + " | ".join(header) + " |")
    parts.append("|" + "---|" * len(header))
    for e in ws.entries:
        cells = [e.row_id, e.function_id, e.parameter_id, e.guideword.label, e.mode or "", e.deviation,
                 e.hazard or "", e.situation, e.consequences or "", "<br>".join(e.causes),
                 ", ".join(e.dsrs), str(e.disposition)]
        parts.append("| " + " | ".join(_md_cell(c) if i != 9 else c for i, c in enumerate(cells)) + " |")
    if ws.dsrs:
        parts += ["", "## Derived safety requirements", "", "| Id | Kind | Requirement |", "|---|---|---|"]
        for d in ws.dsrs:
            parts.append(f"| {d.id} | {d.kind} | {_md_cell(d.text)} |")
    return "\n".join(parts) + "\n"


def render_worksheet(ws: Worksheet, usecases: Sequence[UseCase] = (), fmt: str = "md") -> str:
    if fmt == "md":
        return worksheet_to_markdown(ws, usecases)
    if fmt == "csv":
        return worksheet_to_csv(ws)
    if fmt == "json":
        return dumps(make_document("worksheet", worksheet_to_dict(ws)))
    raise ValueError(f"unknown format {fmt!r}")


def stub_worksheet(model: SystemModel, cells: Iterable[DeviationCell], id: str = "stub") -> Worksheet:
    """One pending row per cell with the guideword interpretation as a prompt."""
    entries = []
    for c in cells:
        p = model.parameter(c.parameter_id)
        name = p.name if p else c.parameter_id
        row_id = f"{c.parameter_id}/{c.guideword.name}" + (f"@{c.mode}" if c.mode else "")
        entries.append(HazopEntry(
            row_id=row_id, function_id=c.function_id, parameter_id=c.parameter_id, guideword=c.guideword,
            mode=c.mode, deviation=f"{name}: {c.guideword.interpretation}", disposition=ANALYSED,
        ))
    return Worksheet(id=id, entries=tuple(entries))


# ---------------------------------------------------------------------------
# reports


def render_validation(report: ValidationReport, fmt: str = "text", label: Optional[str] = None) -> str:
    if fmt == "json":
        return dumps(report.to_dict())
    lines = []
    prefix = f"{label}: " if label else ""
    for v in report.violations:
        lines.append(f"{prefix}{v.rule} [{v.id}] {v.message}")
    for n in report.notes:
        lines.append(f"{prefix}note: {n}")
    if not report.violations:
        lines.append(f"{prefix}ok")
    return "\n".join(lines) + "\n"


def render_coverage(report: CoverageReport, fmt: str = "text") -> str:
    if fmt == "json":
        return dumps(report.to_dict())
    lines = [f"cells: {report.total}", f"covered: {report.covered}",
             f"covered_fraction: {report.covered_fraction:.6f}"]
    for c in report.missing:
        mode = f" mode={c.mode}" if c.mode else ""
        lines.append(f"missing: {c.function_id} {c.parameter_id} {c.guideword.name}{mode}")
    for r in report.unknown:
        lines.append(f"unknown: {r}")
    for group in report.duplicates:
        lines.append(f"duplicate: {', '.join(group)}")
    return "\n".join(lines) + "\n"


def render_outcome(outcome, fmt: str = "text") -> str:
    if fmt == "json":
        return dumps(outcome.to_dict())
    t = "-" if outcome.time_of_event is None else f"{outcome.time_of_event:.2f} s"
    return "\n".join([
        f"classification: {outcome.classification}",
        f"time_of_event: {t}",
        f"min_gap: {outcome.min_gap:.3f} m",
        f"max_abs_lateral_offset: {outcome.max_abs_lateral_offset:.3f} m",
        f"max_abs_lateral_accel: {outcome.max_abs_lateral_accel:.3f} m/s^2",
        f"plausibility_flags: {outcome.plausibility_flags}",
        f"fcw_fired: {str(outcome.fcw_fired).lower()}",
        f"aeb_fired: {str(outcome.aeb_fired).lower()}",
        f"outcome_id: {outcome.outcome_id}",
    ] + ([f"trace: {outcome.trace_path}"] if outcome.trace_path else [])) + "\n"


def render_campaign(matrix, discrepancies, fmt: str = "text") -> str:
    if fmt == "json":
        return dumps({"matrix": matrix.to_dict(), "discrepancies": discrepancies.to_dict()["discrepancies"]})
    lines = [f"runs: {matrix.n_runs}", f"rows: {len(matrix.rows)}", f"evidenced: {len(matrix.evidenced)}", ""]
    width = max((len(r) for r in matrix.rows), default=6)
    lines.append(f"{'row'.ljust(width)}  worst                    runs  failures")
    for rid in sorted(matrix.rows):
        recs = matrix.records(rid)
        n_fail = sum(r.outcome.classification != "success" for r in recs)
        lines.append(f"{rid.ljust(width)}  {matrix.summary[rid]:<23}  {len(recs):>4}  {n_fail:>8}")
    for rid, reason in matrix.unsimulated.items():
        lines.append(f"unsimulated: {rid} ({reason})")
    for d in discrepancies.items:
        lines.append(f"{d.kind}: {d.row_id} ({d.detail})")
    return "\n".join(lines) + "\n"
