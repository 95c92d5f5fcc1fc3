"""Simulation campaigns: worksheet rows x scenarios x magnitudes x tracker variants."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .documents import DocumentError, Fields, dumps, load_document
from .errors import RejectedInput
from .model import Guideword, SystemModel, load_model
from .sim import (
    ControllerConfig,
    InjectionSpec,
    Scenario,
    SensorChannel,
    SimOutcome,
    TrackerConfig,
    injection_from_dict,
    load_scenario,
    resolve_magnitude,
    severity,
    simulate,
    supports,
)
from .worksheet import HazopEntry, Worksheet, load_worksheet


class AmbiguousBinding(RejectedInput):
    pass


@dataclass(frozen=True)
class Binding:
    bound: dict            # parameter id -> channel id
    unbound: dict          # parameter id -> reason


def bind_parameters(model: SystemModel, channels: Sequence[SensorChannel],
                    overrides: Optional[dict] = None) -> Binding:
    """Bind model parameters to sensor channels by declared quantity."""
    overrides = overrides or {}
    by_id = {c.id: c for c in channels}
    bound, unbound = {}, {}
    for fn in model.iter_functions():
        for p in fn.parameters:
            if p.id in bound or p.id in unbound:
                continue
            if p.id in overrides:
                ch = by_id.get(overrides[p.id])
                if ch is None:
                    raise RejectedInput(f"binding override for {p.id} names unknown channel {overrides[p.id]!r}")
                if p.quantity is not None and ch.quantity != p.quantity:
                    raise RejectedInput(f"binding override for {p.id}: channel {ch.id} carries "
                                        f"{ch.quantity}, parameter declares {p.quantity}")
                bound[p.id] = ch.id
                continue
            if p.quantity is None:
                unbound[p.id] = f"no sensor quantity declared for {p.kind} parameter"
                continue
            matches = [c.id for c in channels if c.quantity == p.quantity]
            if not matches:
                unbound[p.id] = f"no channel carries {p.quantity}"
            elif len(matches) > 1:
                raise AmbiguousBinding(
                    f"parameter {p.id} ({p.quantity}) matches channels {' and '.join(matches)}; add a binding override"
                )
            else:
                bound[p.id] = matches[0]
    return Binding(bound, unbound)


# ---------------------------------------------------------------------------
# spec


@dataclass(frozen=True)
class CampaignSpec:
    worksheet_ref: str
    model_ref: str
    scenario_refs: tuple[str, ...]
    magnitude_grid: dict = field(default_factory=dict, hash=False)   # guideword name -> [block]
    monitor_enabled: bool = False
    tracker_variants: tuple[TrackerConfig, ...] = (TrackerConfig(),)
    bindings: dict = field(default_factory=dict, hash=False)
    rows: Optional[tuple[str, ...]] = None
    base_dir: str = "."

    def resolve(self, ref: str) -> Path:
        p = Path(ref)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def grid_for(self, gw: Guideword) -> list[dict]:
        return list(self.magnitude_grid.get(gw.name, [{}]))

    def validate(self) -> None:
        if not self.scenario_refs:
            raise RejectedInput("campaign needs at least one scenario")
        if not self.tracker_variants:
            raise RejectedInput("campaign needs at least one tracker variant")
        for name, blocks in self.magnitude_grid.items():
            gw = Guideword.parse(name)
            if not isinstance(blocks, list) or not blocks:
                raise RejectedInput(f"magnitude_grid[{name}] must be a nonempty list")
            for b in blocks:
                if not isinstance(b, dict):
                    raise RejectedInput(f"magnitude_grid[{name}] entries must be objects")
                resolve_magnitude(gw, b)


def campaign_from_dict(obj, base_dir=".", path=None) -> CampaignSpec:
    f = Fields(obj, "/campaign", path)
    grid = f.dict("magnitude_grid", {})
    variants = f.list("tracker_variants", [{}])
    rows = f.get("rows")
    try:
        grid = {Guideword.parse(k).name: v for k, v in grid.items()}
    except ValueError as exc:
        raise DocumentError(str(exc), path=path, pointer="/campaign/magnitude_grid") from None
    spec = CampaignSpec(
        worksheet_ref=f.str("worksheet"),
        model_ref=f.str("model"),
        scenario_refs=tuple(f.str_list("scenarios")),
        magnitude_grid=grid,
        monitor_enabled=f.bool("monitor_enabled", False),
        tracker_variants=tuple(TrackerConfig.from_dict(v) for v in variants),
        bindings=f.dict("bindings", {}),
        rows=None if rows is None else tuple(f.str_list("rows")),
        base_dir=str(base_dir),
    )
    try:
        spec.validate()
    except (RejectedInput, ValueError) as exc:
        raise DocumentError(str(exc), path=path, pointer="/campaign") from None
    return spec


def load_campaign(path) -> CampaignSpec:
    _, payload = load_document(path, expected="campaign")
    return campaign_from_dict(payload, base_dir=Path(path).parent, path=path)


# ---------------------------------------------------------------------------
# running


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def run_seed(row_id: str, scenario_id: str, block: dict, variant: TrackerConfig, salt: Optional[int] = None) -> int:
    """Stable 64-bit seed from run content, independent of file order.

    ``salt`` (the global ``--seed``) gives a different but equally
    reproducible set of streams.
    """
    key = [row_id, scenario_id, block, variant.to_dict()]
    if salt is not None:
        key.append(salt)
    return int(_digest(key)[:16], 16)


@dataclass(frozen=True)
class RunRecord:
    row_id: str
    scenario_id: str
    guideword: str
    channel_id: str
    magnitude: dict
    tracker: dict
    monitor_enabled: bool
    seed: int
    outcome: SimOutcome

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("row_id", "scenario_id", "guideword", "channel_id",
                                             "magnitude", "tracker", "monitor_enabled", "seed")}
        d["outcome"] = self.outcome.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["outcome"] = SimOutcome.from_dict(d["outcome"])
        return cls(**d)


@dataclass(frozen=True)
class OutcomeMatrix:
    rows: dict                  # row id -> [outcome id]
    summary: dict               # row id -> worst classification
    evidenced: tuple[str, ...]
    unsimulated: dict           # row id -> reason
    outcomes: dict              # outcome id -> RunRecord

    @property
    def n_runs(self) -> int:
        return len(self.outcomes)

    def records(self, row_id: str) -> list[RunRecord]:
        return [self.outcomes[o] for o in self.rows.get(row_id, [])]

    def to_dict(self):
        return {
            "rows": self.rows,
            "summary": self.summary,
            "evidenced": list(self.evidenced),
            "unsimulated": self.unsimulated,
            "outcomes": {k: v.to_dict() for k, v in self.outcomes.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            rows={k: list(v) for k, v in d["rows"].items()},
            summary=dict(d["summary"]),
            evidenced=tuple(d["evidenced"]),
            unsimulated=dict(d["unsimulated"]),
            outcomes={k: RunRecord.from_dict(v) for k, v in d["outcomes"].items()},
        )

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row_id", "worst_classification", "n_runs", "n_failures"])
        for rid in sorted(self.rows):
            recs = self.records(rid)
            w.writerow([rid, self.summary[rid], len(recs),
                        sum(r.outcome.classification != "success" for r in recs)])
        return buf.getvalue()


@dataclass(frozen=True)
class _Task:
    key: str
    row_id: str
    scenario: Scenario
    injection: InjectionSpec
    block: dict
    tracker: TrackerConfig
    monitor: bool
    config: ControllerConfig
    ranges: dict
    want_trace: bool


def _execute(task: _Task):
    outcome, text = simulate(task.scenario, [task.injection], task.tracker, task.monitor,
                             task.config, task.ranges, trace=task.want_trace)
    return task.key, outcome, text


def plan_runs(spec: CampaignSpec, model: SystemModel, worksheet: Worksheet,
              scenarios: Sequence[Scenario], config: ControllerConfig = ControllerConfig(),
              want_trace: bool = False, salt: Optional[int] = None):
    """Expand the cross-product; returns (tasks, rows-in-matrix, unsimulated)."""
    wanted = None if spec.rows is None else set(spec.rows)
    entries: list[HazopEntry] = [
        e for e in worksheet.entries
        if e.disposition.kind == "analysed" and (wanted is None or e.row_id in wanted)
    ]
    tasks, rows, unsimulated = [], [], {}
    bindings = [bind_parameters(model, sc.channels, spec.bindings) for sc in scenarios]
    for e in entries:
        param = model.parameter(e.parameter_id)
        if param is None:
            unsimulated[e.row_id] = f"unknown parameter {e.parameter_id}"
            continue
        simulated = False
        reason = None
        for sc, binding in zip(scenarios, bindings):
            ch_id = binding.bound.get(param.id)
            if ch_id is None:
                reason = binding.unbound.get(param.id, "unbound")
                continue
            ch = sc.channel(ch_id)
            if not supports(e.guideword, ch.quantity):
                reason = f"{e.guideword.name} has no fault model for {ch.quantity}"
                continue
            ranges = {ch.quantity: param.physical_range} if param.physical_range else {}
            for block in spec.grid_for(e.guideword):
                block = dict(block)
                window = block.pop("window", None)
                spurious = block.pop("spurious_target", None)
                for variant in spec.tracker_variants:
                    seed = run_seed(e.row_id, sc.usecase_id, {**block, "window": window}, variant, salt)
                    inj_doc = {"channel_id": ch_id, "guideword": e.guideword.name, "magnitude": block}
                    if window is not None:
                        inj_doc["window"] = window
                    if spurious is not None:
                        inj_doc["spurious_target"] = spurious
                    inj = injection_from_dict(inj_doc)
                    run_sc = replace(sc, seed=seed)
                    try:
                        inj.validate(run_sc)
                    except RejectedInput as exc:
                        raise RejectedInput(
                            f"run ({e.row_id}, {sc.usecase_id}, {json.dumps(block, sort_keys=True)}, "
                            f"{variant.to_dict()}) rejected: {exc}"
                        ) from None
                    key = _digest([e.row_id, sc.usecase_id, inj_doc, variant.to_dict(), spec.monitor_enabled])[:16]
                    tasks.append(_Task(key, e.row_id, run_sc, inj, inj_doc, variant,
                                       spec.monitor_enabled, config, ranges, want_trace))
                    simulated = True
        if simulated:
            rows.append(e.row_id)
        else:
            unsimulated[e.row_id] = reason or "no scenario carries this parameter"
    return tasks, rows, unsimulated


def run_campaign(spec: CampaignSpec, config: ControllerConfig = ControllerConfig(), jobs: Optional[int] = 1,
                 out_dir=None, traces: bool = False, seed: Optional[int] = None) -> OutcomeMatrix:
    """Run every planned simulation and assemble the matrix.

    Results are merged by run identity, so ``jobs`` does not affect the
    output. With ``out_dir`` the matrix JSON, the CSV summary and (when
    ``traces``) one trace CSV per run are written there.
    """
    spec.validate()
    model = load_model(spec.resolve(spec.model_ref))
    worksheet = load_worksheet(spec.resolve(spec.worksheet_ref))
    scenarios = [load_scenario(spec.resolve(r)) for r in spec.scenario_refs]
    ids = [s.usecase_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise RejectedInput("campaign scenarios must have distinct use-case ids")
    tasks, rows, unsimulated = plan_runs(spec, model, worksheet, scenarios, config, want_trace=traces, salt=seed)

    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_execute(t) for t in tasks]

    by_key = {t.key: t for t in tasks}
    outcomes = {}
    trace_texts = {}
    for key, outcome, text in results:
        t = by_key[key]
        trace_rel = f"traces/{key}.csv" if traces else ""
        outcome = replace(outcome, outcome_id=key, trace_path=trace_rel)
        outcomes[key] = RunRecord(t.row_id, t.scenario.usecase_id, t.injection.guideword.name,
                                  t.injection.channel_id, t.block, t.tracker.to_dict(),
                                  t.monitor, t.scenario.seed, outcome)
        trace_texts[key] = text
    outcomes = dict(sorted(outcomes.items()))

    row_map = {r: [] for r in sorted(rows)}
    for key, rec in outcomes.items():
        row_map[rec.row_id].append(key)
    summary = {}
    evidenced = []
    for rid, keys in row_map.items():
        worst = max((outcomes[k].outcome.classification for k in keys), key=severity)
        summary[rid] = worst
        entry = worksheet.entry(rid)
        if entry is not None and entry.has_hazard and worst != "success":
            evidenced.append(rid)
    matrix = OutcomeMatrix(row_map, summary, tuple(evidenced), dict(sorted(unsimulated.items())), outcomes)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "matrix.json").write_bytes(dumps(matrix.to_dict()).encode("utf-8"))
        (out / "summary.csv").write_bytes(matrix.summary_csv().encode("utf-8"))
        if traces:
            (out / "traces").mkdir(exist_ok=True)
            for key, text in trace_texts.items():
                (out / "traces" / f"{key}.csv").write_bytes(text.encode("utf-8"))
    return matrix


# ---------------------------------------------------------------------------
# evidence


@dataclass(frozen=True, order=True)
class Discrepancy:
    row_id: str
    kind: str       # unevidenced-hazard | unclaimed-hazard
    detail: str

    def to_dict(self):
        return {"row_id": self.row_id, "kind": self.kind, "detail": self.detail}

    @classmethod
    def from_dict(cls, d):
        return cls(d["row_id"], d["kind"], d["detail"])


@dataclass(frozen=True)
class DiscrepancyReport:
    items: tuple[Discrepancy, ...] = ()

    def __bool__(self):
        return bool(self.items)

    def __len__(self):
        return len(self.items)

    def kinds(self) -> set[str]:
        return {d.kind for d in self.items}

    def to_dict(self):
        return {"discrepancies": [d.to_dict() for d in self.items]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Discrepancy.from_dict(x) for x in d["discrepancies"]))


def evidence_check(matrix: OutcomeMatrix, worksheet: Worksheet) -> DiscrepancyReport:
    """Compare analyst hazard claims with simulated outcomes. Advisory only."""
    items = []
    for rid in sorted(matrix.rows):
        entry = worksheet.entry(rid)
        if entry is None:
            continue
        recs = matrix.records(rid)
        failures = [r.outcome.classification for r in recs if r.outcome.classification != "success"]
        if entry.has_hazard and not failures:
            items.append(Discrepancy(rid, "unevidenced-hazard", f"all {len(recs)} runs succeeded"))
        elif not entry.has_hazard and failures:
            worst = max(failures, key=severity)
            items.append(Discrepancy(rid, "unclaimed-hazard",
                                     f"{len(failures)} of {len(recs)} runs failed (worst: {worst})"))
    return DiscrepancyReport(tuple(sorted(items)))
