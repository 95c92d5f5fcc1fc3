"""System decomposition: services, capabilities, functions, implementations
and data sources, plus structural validation.

Capabilities can be declared inline under a service or referenced by id from
another service; functions likewise under capabilities. Implementations and
data sources are declared at model level and referenced by id.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import networkx as nx

from ..documents import DocumentError, Fields

CONTROLS = frozenset({"steering", "acceleration", "braking", "warning"})
PARAMETER_KINDS = frozenset({"scalar", "vector", "detection-set", "classification", "event"})
MODALITIES = frozenset({"camera", "radar", "lidar", "ultrasound", "map", "other"})
QUANTITIES = frozenset({
    "lane_lateral_offset", "lane_curvature", "target_range",
    "target_relative_velocity", "target_class", "target_present",
})


@dataclass(frozen=True)
class Parameter:
    id: str
    name: str
    kind: str
    unit: str = "none"
    physical_range: Optional[tuple[float, float]] = None
    sign_meaningful: bool = True
    # sensor quantity carrying this parameter; used for simulation binding
    quantity: Optional[str] = None

    @property
    def nonnegative(self) -> bool:
        return self.physical_range is not None and self.physical_range[0] >= 0


@dataclass(frozen=True)
class Function:
    id: str
    name: str
    parameters: tuple[Parameter, ...] = ()
    implementations: tuple[str, ...] = ()


@dataclass(frozen=True)
class Capability:
    id: str
    name: str
    controls: frozenset[str]
    functions: tuple[Union[Function, str], ...] = ()


@dataclass(frozen=True)
class Service:
    id: str
    name: str
    level: int
    sub_services: tuple[str, ...] = ()
    capabilities: tuple[Union[Capability, str], ...] = ()


@dataclass(frozen=True)
class Implementation:
    id: str
    name: str
    data_sources: tuple[str, ...] = ()


@dataclass(frozen=True)
class DataSource:
    id: str
    name: str
    modality: str


@dataclass(frozen=True)
class SystemModel:
    id: str
    services: tuple[Service, ...] = ()
    implementations: tuple[Implementation, ...] = ()
    data_sources: tuple[DataSource, ...] = ()
    metadata: dict = field(default_factory=dict, hash=False, compare=True)

    # -- lookups over declarations (first declaration wins on duplicates) --

    def iter_capabilities(self) -> Iterator[Capability]:
        for svc in self.services:
            for cap in svc.capabilities:
                if isinstance(cap, Capability):
                    yield cap

    def iter_functions(self) -> Iterator[Function]:
        for cap in self.iter_capabilities():
            for fn in cap.functions:
                if isinstance(fn, Function):
                    yield fn

    def capability(self, cap_id: str) -> Optional[Capability]:
        return next((c for c in self.iter_capabilities() if c.id == cap_id), None)

    def function(self, fn_id: str) -> Optional[Function]:
        return next((f for f in self.iter_functions() if f.id == fn_id), None)

    def parameter(self, param_id: str) -> Optional[Parameter]:
        for fn in self.iter_functions():
            for p in fn.parameters:
                if p.id == param_id:
                    return p
        return None

    def functions_of(self, cap: Capability) -> list[Function]:
        out = []
        for ref in cap.functions:
            fn = ref if isinstance(ref, Function) else self.function(ref)
            if fn is not None:
                out.append(fn)
        return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True, order=True)
class Violation:
    rule: str
    id: str
    message: str = ""

    def to_dict(self):
        return {"rule": self.rule, "id": self.id, "message": self.message}

    @classmethod
    def from_dict(cls, d):
        return cls(d["rule"], d["id"], d.get("message", ""))


@dataclass(frozen=True)
class ValidationReport:
    """Violations make the subject invalid; notes are informational only."""

    violations: tuple[Violation, ...] = ()
    notes: tuple[Violation, ...] = ()

    @classmethod
    def build(cls, violations, notes=()):
        return cls(tuple(sorted(set(violations))), tuple(sorted(set(notes))))

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport.build(self.violations + other.violations, self.notes + other.notes)

    def to_dict(self):
        return {
            "violations": [v.to_dict() for v in self.violations],
            "notes": [v.to_dict() for v in self.notes],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(Violation.from_dict(v) for v in d.get("violations", [])),
            tuple(Violation.from_dict(v) for v in d.get("notes", [])),
        )


def _declarations(model: SystemModel):
    """Yield (kind, object, parent_id) for every declaration in the model."""
    for svc in model.services:
        yield "service", svc, None
        for cap in svc.capabilities:
            if isinstance(cap, Capability):
                yield "capability", cap, svc.id
                for fn in cap.functions:
                    if isinstance(fn, Function):
                        yield "function", fn, cap.id
                        for p in fn.parameters:
                            yield "parameter", p, fn.id
    for impl in model.implementations:
        yield "implementation", impl, None
    for ds in model.data_sources:
        yield "data_source", ds, None


def _references(model: SystemModel):
    """Yield (source_id, target_id, expected_kind) for every reference edge.

    Inline declarations count as edges too so that the graph covers the
    whole hierarchy.
    """
    for svc in model.services:
        for sub in svc.sub_services:
            yield svc.id, sub, "service"
        for cap in svc.capabilities:
            cid = cap.id if isinstance(cap, Capability) else cap
            yield svc.id, cid, "capability"
    for cap in model.iter_capabilities():
        for fn in cap.functions:
            fid = fn.id if isinstance(fn, Function) else fn
            yield cap.id, fid, "function"
    for fn in model.iter_functions():
        for impl in fn.implementations:
            yield fn.id, impl, "implementation"
    for impl in model.implementations:
        for ds in impl.data_sources:
            yield impl.id, ds, "data_source"


def validate_model(model: SystemModel) -> ValidationReport:
    """Check every structural and composition rule; never raises.

    Rule names: duplicate-id, dangling-reference, reference-cycle,
    invalid-level, sub-service-level, L1-dual-control, empty-controls,
    unknown-control, duplicate-parameter-name, invalid-range, missing-unit,
    invalid-kind, invalid-quantity, invalid-modality. The only note is
    shared-capability.
    """
    out: list[Violation] = []
    notes: list[Violation] = []

    kinds: dict[str, set[str]] = defaultdict(set)
    counts: dict[str, int] = defaultdict(int)
    for kind, obj, _ in _declarations(model):
        kinds[obj.id].add(kind)
        counts[obj.id] += 1
    for ident, n in counts.items():
        if n > 1:
            out.append(Violation("duplicate-id", ident, f"declared {n} times"))

    graph = nx.DiGraph()
    graph.add_nodes_from(counts)
    for src, dst, expected in _references(model):
        if dst not in kinds:
            out.append(Violation("dangling-reference", src, f"{expected} {dst!r} is not declared"))
            continue
        if expected not in kinds[dst]:
            found = "/".join(sorted(kinds[dst]))
            out.append(Violation("dangling-reference", src, f"{dst!r} is a {found}, expected {expected}"))
            continue
        graph.add_edge(src, dst)
    for scc in nx.strongly_connected_components(graph):
        if len(scc) > 1 or any(graph.has_edge(n, n) for n in scc):
            members = sorted(scc)
            out.append(Violation("reference-cycle", members[0], "cycle through " + ", ".join(members)))

    services = {s.id: s for s in model.services}
    caps_by_id = {c.id: c for c in model.iter_capabilities()}
    owners: dict[str, set[str]] = defaultdict(set)
    for svc in model.services:
        if not 0 <= svc.level <= 5:
            out.append(Violation("invalid-level", svc.id, f"level {svc.level} outside 0-5"))
        for sub in svc.sub_services:
            child = services.get(sub)
            if child is not None and child.level >= svc.level:
                out.append(Violation(
                    "sub-service-level", svc.id,
                    f"level-{svc.level} service uses level-{child.level} sub-service {sub!r}",
                ))
        for cap in svc.capabilities:
            owners[cap.id if isinstance(cap, Capability) else cap].add(svc.id)
        if svc.level == 1:
            controls = _service_controls(svc, services, caps_by_id)
            # braking is a form of longitudinal (acceleration) control
            if "steering" in controls and controls & {"acceleration", "braking"}:
                out.append(Violation(
                    "L1-dual-control", svc.id,
                    "level-1 service controls both steering and acceleration",
                ))
    for cid, svcs in owners.items():
        if len(svcs) > 1:
            notes.append(Violation("shared-capability", cid, "used by " + ", ".join(sorted(svcs))))

    for cap in model.iter_capabilities():
        if not cap.controls:
            out.append(Violation("empty-controls", cap.id, "capability controls nothing"))
        for c in sorted(cap.controls - CONTROLS):
            out.append(Violation("unknown-control", cap.id, f"unknown control {c!r}"))

    for fn in model.iter_functions():
        seen = set()
        for p in fn.parameters:
            if p.name in seen:
                out.append(Violation("duplicate-parameter-name", fn.id, f"parameter name {p.name!r} repeated"))
            seen.add(p.name)
            out.extend(_parameter_violations(p))

    for ds in model.data_sources:
        if ds.modality not in MODALITIES:
            out.append(Violation("invalid-modality", ds.id, f"unknown modality {ds.modality!r}"))

    return ValidationReport.build(out, notes)


def _service_controls(svc, services, caps_by_id, seen=None) -> set[str]:
    seen = set() if seen is None else seen
    if svc.id in seen:
        return set()
    seen.add(svc.id)
    controls: set[str] = set()
    for cap in svc.capabilities:
        cap = caps_by_id.get(cap) if isinstance(cap, str) else cap
        if cap is not None:
            controls |= set(cap.controls)
    for sub in svc.sub_services:
        if sub in services:
            controls |= _service_controls(services[sub], services, caps_by_id, seen)
    return controls


def _parameter_violations(p: Parameter) -> list[Violation]:
    out = []
    if p.kind not in PARAMETER_KINDS:
        out.append(Violation("invalid-kind", p.id, f"unknown parameter kind {p.kind!r}"))
    if p.kind in ("scalar", "vector") and not (p.unit or "").strip():
        out.append(Violation("missing-unit", p.id, f"{p.kind} parameter needs a unit"))
    if p.physical_range is not None and p.physical_range[0] > p.physical_range[1]:
        out.append(Violation("invalid-range", p.id, f"range {list(p.physical_range)} has min > max"))
    if p.quantity is not None and p.quantity not in QUANTITIES:
        out.append(Violation("invalid-quantity", p.id, f"unknown quantity {p.quantity!r}"))
    return out


# ---------------------------------------------------------------------------
# JSON


def parameter_from_dict(f: Fields) -> Parameter:
    rng = f.get("physical_range")
    if rng is not None:
        if (not isinstance(rng, list) or len(rng) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in rng)):
            raise DocumentError("expected [min, max]", path=f.path, pointer=f.pointer + "/physical_range")
        rng = (float(rng[0]), float(rng[1]))
    return Parameter(
        id=f.str("id"),
        name=f.str("name"),
        kind=f.str("kind"),
        unit=f.str("unit", default="none"),
        physical_range=rng,
        sign_meaningful=f.bool("sign_meaningful", default=True),
        quantity=f.str("quantity", required=False),
    )


def _function_from(obj, pointer, path) -> Union[Function, str]:
    if isinstance(obj, str):
        return obj
    f = Fields(obj, pointer, path)
    return Function(
        id=f.str("id"),
        name=f.str("name"),
        parameters=tuple(
            parameter_from_dict(Fields(p, f.at("parameters", i), path))
            for i, p in enumerate(f.list("parameters", []))
        ),
        implementations=tuple(f.str_list("implementations", [])),
    )


def _capability_from(obj, pointer, path) -> Union[Capability, str]:
    if isinstance(obj, str):
        return obj
    f = Fields(obj, pointer, path)
    return Capability(
        id=f.str("id"),
        name=f.str("name"),
        controls=frozenset(f.str_list("controls", [])),
        functions=tuple(
            _function_from(x, f.at("functions", i), path) for i, x in enumerate(f.list("functions", []))
        ),
    )


def model_from_dict(obj, path=None) -> SystemModel:
    f = Fields(obj, "/model", path)
    services = []
    for i, s in enumerate(f.list("services", [])):
        sf = Fields(s, f.at("services", i), path)
        services.append(Service(
            id=sf.str("id"),
            name=sf.str("name"),
            level=sf.int("level"),
            sub_services=tuple(sf.str_list("sub_services", [])),
            capabilities=tuple(
                _capability_from(c, sf.at("capabilities", j), path)
                for j, c in enumerate(sf.list("capabilities", []))
            ),
        ))
    impls = []
    for i, x in enumerate(f.list("implementations", [])):
        xf = Fields(x, f.at("implementations", i), path)
        impls.append(Implementation(xf.str("id"), xf.str("name"), tuple(xf.str_list("data_sources", []))))
    sources = []
    for i, x in enumerate(f.list("data_sources", [])):
        xf = Fields(x, f.at("data_sources", i), path)
        sources.append(DataSource(xf.str("id"), xf.str("name"), xf.str("modality")))
    metadata = f.dict("metadata", {})
    return SystemModel(
        id=f.str("id"),
        services=tuple(services),
        implementations=tuple(impls),
        data_sources=tuple(sources),
        metadata={str(k): str(v) for k, v in metadata.items()},
    )


def parameter_to_dict(p: Parameter) -> dict:
    d = {"id": p.id, "name": p.name, "kind": p.kind, "unit": p.unit, "sign_meaningful": p.sign_meaningful}
    if p.physical_range is not None:
        d["physical_range"] = list(p.physical_range)
    if p.quantity is not None:
        d["quantity"] = p.quantity
    return d


def model_to_dict(model: SystemModel) -> dict:
    def fn(x):
        if isinstance(x, str):
            return x
        return {
            "id": x.id, "name": x.name,
            "parameters": [parameter_to_dict(p) for p in x.parameters],
            "implementations": list(x.implementations),
        }

    def cap(x):
        if isinstance(x, str):
            return x
        return {"id": x.id, "name": x.name, "controls": sorted(x.controls), "functions": [fn(y) for y in x.functions]}

    return {
        "id": model.id,
        "services": [
            {"id": s.id, "name": s.name, "level": s.level, "sub_services": list(s.sub_services),
             "capabilities": [cap(c) for c in s.capabilities]}
            for s in model.services
        ],
        "implementations": [
            {"id": i.id, "name": i.name, "data_sources": list(i.data_sources)} for i in model.implementations
        ],
        "data_sources": [{"id": d.id, "name": d.name, "modality": d.modality} for d in model.data_sources],
        "metadata": dict(model.metadata),
    }


def load_model(path) -> SystemModel:
    from ..documents import load_document

    _, payload = load_document(path, expected="model")
    return model_from_dict(payload, path=path)
