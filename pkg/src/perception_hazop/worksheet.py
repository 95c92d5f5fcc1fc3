"""Scenario use-cases, HAZOP worksheet rows and derived safety requirements,
with consistency checks."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import networkx as nx

from .documents import DocumentError, Fields, load_document
from .errors import RejectedInput
from .model import Guideword, SystemModel, ValidationReport, Violation

DSR_KINDS = frozenset({
    "likelihood-reduction", "mitigation", "plausibility-check", "performance-bound", "mode-transition",
})

# use-case element name -> (attribute, display label)
USECASE_ELEMENTS = (
    ("primary_environment", "Primary environment"),
    ("goal_in_context", "Goal in context"),
    ("scope", "Scope"),
    ("pre_conditions", "Pre-conditions"),
    ("success_end_conditions", "Success end conditions"),
    ("failed_end_conditions", "Failed end conditions"),
    ("actors", "Actors"),
    ("trigger", "Trigger"),
    ("description", "Description"),
    ("extension", "Extension"),
)


@dataclass(frozen=True)
class Step:
    index: int
    action: str


@dataclass(frozen=True)
class UseCase:
    id: str
    title: str
    primary_environment: str
    goal_in_context: str
    scope: str = ""
    pre_conditions: tuple[str, ...] = ()
    success_end_conditions: tuple[str, ...] = ()
    failed_end_conditions: tuple[str, ...] = ()
    actors: tuple[str, ...] = ()
    trigger: str = ""
    description: tuple[Step, ...] = ()
    extension: tuple[Step, ...] = ()


@dataclass(frozen=True)
class Disposition:
    kind: str  # analysed | not_applicable | same_as
    target: Optional[str] = None

    @classmethod
    def parse(cls, value) -> "Disposition":
        if isinstance(value, Disposition):
            return value
        if isinstance(value, dict) and set(value) == {"same_as"}:
            return cls("same_as", str(value["same_as"]))
        if isinstance(value, str):
            text = value.strip()
            if text in ("analysed", "not_applicable"):
                return cls(text)
            if text.startswith("same_as(") and text.endswith(")"):
                return cls("same_as", text[len("same_as("):-1])
        raise ValueError(f"invalid disposition {value!r}")

    def to_json(self):
        return {"same_as": self.target} if self.kind == "same_as" else self.kind

    def __str__(self):
        return f"same_as({self.target})" if self.kind == "same_as" else self.kind


ANALYSED = Disposition("analysed")
NOT_APPLICABLE = Disposition("not_applicable")


@dataclass(frozen=True)
class HazopEntry:
    row_id: str
    function_id: str
    parameter_id: str
    guideword: Guideword
    deviation: str = ""
    situation: str = ""
    hazard: Optional[str] = None
    consequences: Optional[str] = None
    causes: tuple[str, ...] = ()
    dsrs: tuple[str, ...] = ()
    disposition: Disposition = ANALYSED
    mode: Optional[str] = None

    @property
    def cell_key(self):
        return (self.function_id, self.parameter_id, self.guideword, self.mode)

    @property
    def has_hazard(self) -> bool:
        return bool(self.hazard and self.hazard.strip())


@dataclass(frozen=True)
class DSR:
    id: str
    text: str
    kind: str
    evidence_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Worksheet:
    id: str
    entries: tuple[HazopEntry, ...] = ()
    dsrs: tuple[DSR, ...] = ()
    usecase_id: Optional[str] = None

    def entry(self, row_id: str) -> Optional[HazopEntry]:
        return next((e for e in self.entries if e.row_id == row_id), None)

    def dsr(self, dsr_id: str) -> Optional[DSR]:
        return next((d for d in self.dsrs if d.id == dsr_id), None)

    @classmethod
    def combine(cls, sheets: Iterable["Worksheet"], id: str = "combined") -> "Worksheet":
        sheets = list(sheets)
        return cls(
            id=id,
            entries=tuple(e for s in sheets for e in s.entries),
            dsrs=tuple(d for s in sheets for d in s.dsrs),
        )


# ---------------------------------------------------------------------------
# use-case validation


def _steps_contiguous(steps) -> bool:
    return [s.index for s in steps] == list(range(1, len(steps) + 1))


def validate_usecase(uc: UseCase) -> ValidationReport:
    out = []
    for attr, label in USECASE_ELEMENTS:
        if attr in ("scope", "extension", "failed_end_conditions", "description"):
            continue
        value = getattr(uc, attr)
        if isinstance(value, str):
            empty = not value.strip()
        else:
            empty = not any(str(v).strip() for v in value)
        if empty:
            out.append(Violation("missing-element", uc.id, f"{label} is empty"))
    if not uc.title.strip():
        out.append(Violation("missing-element", uc.id, "Title is empty"))
    if not any(c.strip() for c in uc.failed_end_conditions):
        out.append(Violation("no-failed-end-condition", uc.id, "Failed end conditions is empty"))
    if not uc.description:
        out.append(Violation("empty-description", uc.id, "Description has no steps"))
    elif not _steps_contiguous(uc.description):
        out.append(Violation("non-contiguous-steps", uc.id,
                             f"Description steps {[s.index for s in uc.description]} are not 1..n"))
    if uc.extension and not _steps_contiguous(uc.extension):
        out.append(Violation("non-contiguous-steps", uc.id,
                             f"Extension steps {[s.index for s in uc.extension]} are not 1..n"))
    return ValidationReport.build(out)


def validate_usecases(usecases: Iterable[UseCase]) -> ValidationReport:
    usecases = list(usecases)
    report = ValidationReport()
    for uc in usecases:
        report = report.merged(validate_usecase(uc))
    dupes = [Violation("duplicate-id", i, f"use case declared {n} times")
             for i, n in Counter(u.id for u in usecases).items() if n > 1]
    return report.merged(ValidationReport.build(dupes))


# ---------------------------------------------------------------------------
# worksheet lint

LintRule = Callable[[Worksheet, SystemModel], list]
OPTIONAL_RULES: dict[str, LintRule] = {}


def optional_rule(name):
    def register(fn):
        OPTIONAL_RULES[name] = fn
        return fn
    return register


@dataclass(frozen=True)
class RuleSet:
    enabled: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        unknown = set(self.enabled) - set(OPTIONAL_RULES)
        if unknown:
            raise RejectedInput(f"unknown lint rule(s): {', '.join(sorted(unknown))}")

    @classmethod
    def of(cls, *names: str) -> "RuleSet":
        return cls(frozenset(names))

    @classmethod
    def parse(cls, text: Optional[str]) -> "RuleSet":
        if not text:
            return cls()
        return cls(frozenset(n.strip() for n in text.split(",") if n.strip()))

    @classmethod
    def all(cls) -> "RuleSet":
        return cls(frozenset(OPTIONAL_RULES))


@optional_rule("reverse-needs-plausibility")
def _reverse_needs_plausibility(ws: Worksheet, model: SystemModel) -> list:
    out = []
    kinds = {d.id: d.kind for d in ws.dsrs}
    for e in ws.entries:
        if e.guideword is not Guideword.Reverse or e.disposition.kind != "analysed":
            continue
        p = model.parameter(e.parameter_id)
        if p is None or p.sign_meaningful or not p.nonnegative:
            continue
        if not any(kinds.get(d) == "plausibility-check" for d in e.dsrs):
            out.append(Violation(
                "reverse-needs-plausibility", e.row_id,
                f"sign reversal of {p.name!r} is physically impossible; cite a plausibility-check DSR",
            ))
    return out


def lint_worksheet(ws: Worksheet, model: SystemModel, rules: RuleSet = RuleSet()) -> ValidationReport:
    """Structural checks plus the optional rules switched on in ``rules``."""
    out: list[Violation] = []

    for rid, n in Counter(e.row_id for e in ws.entries).items():
        if n > 1:
            out.append(Violation("duplicate-row-id", rid, f"row id used {n} times"))
    by_cell = defaultdict(list)
    for e in ws.entries:
        by_cell[e.cell_key].append(e.row_id)
    for key, rows in by_cell.items():
        if len(rows) > 1:
            for rid in rows:
                out.append(Violation("duplicate-cell", rid, "same function/parameter/guideword/mode as "
                                     + ", ".join(sorted(r for r in rows if r != rid) or rows)))

    dsr_ids = Counter(d.id for d in ws.dsrs)
    for d in ws.dsrs:
        if dsr_ids[d.id] > 1:
            out.append(Violation("duplicate-dsr-id", d.id, "DSR id used more than once"))
        if not d.text.strip():
            out.append(Violation("empty-dsr-text", d.id, "DSR has no text"))
        if d.kind not in DSR_KINDS:
            out.append(Violation("invalid-dsr-kind", d.id, f"unknown DSR kind {d.kind!r}"))

    rows = {e.row_id for e in ws.entries}
    same_as = nx.DiGraph()
    for e in ws.entries:
        fn = model.function(e.function_id)
        if fn is None:
            out.append(Violation("unknown-function", e.row_id, f"function {e.function_id!r} not in model"))
        elif model.parameter(e.parameter_id) is None:
            out.append(Violation("unknown-parameter", e.row_id, f"parameter {e.parameter_id!r} not in model"))
        elif all(p.id != e.parameter_id for p in fn.parameters):
            out.append(Violation("parameter-not-in-function", e.row_id,
                                 f"parameter {e.parameter_id!r} does not belong to {e.function_id!r}"))
        if e.has_hazard:
            if not (e.consequences and e.consequences.strip()):
                out.append(Violation("hazard-without-consequence", e.row_id, "hazard given without consequences"))
            if not any(c.strip() for c in e.causes):
                out.append(Violation("hazard-without-cause", e.row_id, "hazard given without causes"))
        for d in e.dsrs:
            if d not in dsr_ids:
                out.append(Violation("unknown-dsr", e.row_id, f"DSR {d!r} is not defined"))
        if e.disposition.kind == "same_as":
            if e.disposition.target not in rows:
                out.append(Violation("same-as-missing-target", e.row_id,
                                     f"same_as target {e.disposition.target!r} does not exist"))
            else:
                same_as.add_edge(e.row_id, e.disposition.target)
    for scc in nx.strongly_connected_components(same_as):
        if len(scc) > 1 or any(same_as.has_edge(n, n) for n in scc):
            members = sorted(scc)
            out.append(Violation("same-as-cycle", members[0], "same_as cycle through " + ", ".join(members)))

    for name in sorted(rules.enabled):
        out.extend(OPTIONAL_RULES[name](ws, model))
    return ValidationReport.build(out)


# ---------------------------------------------------------------------------
# JSON


def _steps(f: Fields, key) -> tuple[Step, ...]:
    steps = []
    for i, s in enumerate(f.list(key, [])):
        sf = Fields(s, f.at(key, i), f.path)
        steps.append(Step(sf.int("index"), sf.str("action")))
    return tuple(steps)


def usecase_from_dict(obj, pointer="/usecase", path=None) -> UseCase:
    f = Fields(obj, pointer, path)
    return UseCase(
        id=f.str("id"),
        title=f.str("title", default=""),
        primary_environment=f.str("primary_environment", default=""),
        goal_in_context=f.str("goal_in_context", default=""),
        scope=f.str("scope", default=""),
        pre_conditions=tuple(f.str_list("pre_conditions", [])),
        success_end_conditions=tuple(f.str_list("success_end_conditions", [])),
        failed_end_conditions=tuple(f.str_list("failed_end_conditions", [])),
        actors=tuple(f.str_list("actors", [])),
        trigger=f.str("trigger", default=""),
        description=_steps(f, "description"),
        extension=_steps(f, "extension"),
    )


def usecase_to_dict(uc: UseCase) -> dict:
    return {
        "id": uc.id, "title": uc.title, "primary_environment": uc.primary_environment,
        "goal_in_context": uc.goal_in_context, "scope": uc.scope,
        "pre_conditions": list(uc.pre_conditions),
        "success_end_conditions": list(uc.success_end_conditions),
        "failed_end_conditions": list(uc.failed_end_conditions),
        "actors": list(uc.actors), "trigger": uc.trigger,
        "description": [{"index": s.index, "action": s.action} for s in uc.description],
        "extension": [{"index": s.index, "action": s.action} for s in uc.extension],
    }


def _opt_str(f: Fields, key):
    value = f.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise DocumentError("expected a string or null", path=f.path, pointer=f"{f.pointer}/{key}")
    return value


def entry_from_dict(obj, pointer, path=None) -> HazopEntry:
    f = Fields(obj, pointer, path)
    try:
        gw = Guideword.parse(f.str("guideword"))
    except ValueError as exc:
        raise DocumentError(str(exc), path=path, pointer=pointer + "/guideword") from None
    try:
        disp = Disposition.parse(f.get("disposition", "analysed"))
    except ValueError as exc:
        raise DocumentError(str(exc), path=path, pointer=pointer + "/disposition") from None
    return HazopEntry(
        row_id=f.str("row_id"),
        function_id=f.str("function_id"),
        parameter_id=f.str("parameter_id"),
        guideword=gw,
        mode=_opt_str(f, "mode"),
        deviation=f.str("deviation", default=""),
        hazard=_opt_str(f, "hazard"),
        situation=f.str("situation", default=""),
        consequences=_opt_str(f, "consequences"),
        causes=tuple(f.str_list("causes", [])),
        dsrs=tuple(f.str_list("dsrs", [])),
        disposition=disp,
    )


def entry_to_dict(e: HazopEntry) -> dict:
    return {
        "row_id": e.row_id, "function_id": e.function_id, "parameter_id": e.parameter_id,
        "guideword": e.guideword.name, "mode": e.mode, "deviation": e.deviation,
        "hazard": e.hazard, "situation": e.situation, "consequences": e.consequences,
        "causes": list(e.causes), "dsrs": list(e.dsrs), "disposition": e.disposition.to_json(),
    }


def dsr_from_dict(obj, pointer, path=None) -> DSR:
    f = Fields(obj, pointer, path)
    return DSR(f.str("id"), f.str("text", default=""), f.str("kind"), tuple(f.str_list("evidence_refs", [])))


def dsr_to_dict(d: DSR) -> dict:
    return {"id": d.id, "text": d.text, "kind": d.kind, "evidence_refs": list(d.evidence_refs)}


def worksheet_from_dict(obj, path=None) -> Worksheet:
    f = Fields(obj, "/worksheet", path)
    return Worksheet(
        id=f.str("id"),
        usecase_id=f.str("usecase_id", required=False),
        entries=tuple(entry_from_dict(e, f.at("entries", i), path) for i, e in enumerate(f.list("entries", []))),
        dsrs=tuple(dsr_from_dict(d, f.at("dsrs", i), path) for i, d in enumerate(f.list("dsrs", []))),
    )


def worksheet_to_dict(ws: Worksheet) -> dict:
    d = {
        "id": ws.id,
        "entries": [entry_to_dict(e) for e in ws.entries],
        "dsrs": [dsr_to_dict(x) for x in ws.dsrs],
    }
    if ws.usecase_id is not None:
        d["usecase_id"] = ws.usecase_id
    return d


def load_worksheet(path) -> Worksheet:
    _, payload = load_document(path, expected="worksheet")
    return worksheet_from_dict(payload, path=path)


def load_usecases(path) -> list[UseCase]:
    _, payload = load_document(path, expected="usecases")
    if not isinstance(payload, list):
        raise DocumentError("expected a list of use cases", path=path, pointer="/usecases")
    return [usecase_from_dict(u, f"/usecases/{i}", path) for i, u in enumerate(payload)]
