"""Enumeration of the deviation space and worksheet coverage."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import RejectedInput
from .model import Guideword, SystemModel
from .worksheet import HazopEntry


@dataclass(frozen=True)
class DeviationCell:
    function_id: str
    parameter_id: str
    guideword: Guideword
    mode: Optional[str] = None

    @property
    def key(self):
        return (self.function_id, self.parameter_id, self.guideword, self.mode)

    def to_dict(self):
        return {"function_id": self.function_id, "parameter_id": self.parameter_id,
                "guideword": self.guideword.name, "mode": self.mode}

    @classmethod
    def from_dict(cls, d):
        return cls(d["function_id"], d["parameter_id"], Guideword.parse(d["guideword"]), d.get("mode"))


def natural_key(text: str):
    """Sort key that orders ``ACC 1.10`` after ``ACC 1.9``."""
    return tuple((0, int(tok)) if tok.isdigit() else (1, tok) for tok in re.findall(r"\d+|\D+", text))


def enumerate_cells(model: SystemModel, capability_filter: Optional[Sequence[str]] = None,
                    modes: Optional[Sequence[str]] = None) -> list[DeviationCell]:
    """Every (function, parameter, guideword[, mode]) cell of the selected capabilities.

    ``capability_filter=None`` selects all capabilities; an empty list selects
    none. Modes multiply the space only when given.
    """
    caps = list(model.iter_capabilities())
    if capability_filter is not None:
        known = {c.id for c in caps}
        unknown = [c for c in capability_filter if c not in known]
        if unknown:
            raise RejectedInput(f"unknown capability id(s): {', '.join(unknown)}")
        wanted = set(capability_filter)
        caps = [c for c in caps if c.id in wanted]

    functions = {}
    for cap in caps:
        for fn in model.functions_of(cap):
            functions.setdefault(fn.id, fn)

    mode_list: list[Optional[str]] = list(dict.fromkeys(modes)) if modes else [None]
    cells = []
    for fid in sorted(functions, key=natural_key):
        fn = functions[fid]
        for pid in sorted({p.id for p in fn.parameters}, key=natural_key):
            for gw in Guideword:
                for mode in mode_list:
                    cells.append(DeviationCell(fid, pid, gw, mode))
    return cells


@dataclass(frozen=True)
class CoverageReport:
    total: int
    missing: tuple[DeviationCell, ...]
    unknown: tuple[str, ...]
    duplicates: tuple[tuple[str, ...], ...]

    @property
    def covered_fraction(self) -> float:
        if self.total == 0:
            return 1.0
        return (self.total - len(self.missing)) / self.total

    @property
    def covered(self) -> int:
        return self.total - len(self.missing)

    def to_dict(self):
        return {
            "total": self.total,
            "covered_fraction": self.covered_fraction,
            "missing": [c.to_dict() for c in self.missing],
            "unknown": list(self.unknown),
            "duplicates": [list(d) for d in self.duplicates],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            total=d["total"],
            missing=tuple(DeviationCell.from_dict(c) for c in d["missing"]),
            unknown=tuple(d["unknown"]),
            duplicates=tuple(tuple(x) for x in d["duplicates"]),
        )


def check_coverage(cells: Sequence[DeviationCell], entries: Iterable[HazopEntry]) -> CoverageReport:
    """Compare a worksheet against an enumeration.

    A row with no mode covers every mode of its (function, parameter,
    guideword). Any disposition counts as covering. ``duplicates`` lists
    the row ids of each group of rows sharing one cell key.
    """
    entries = list(entries)
    cell_keys = {c.key for c in cells}
    triples = {k[:3] for k in cell_keys}

    covered = set()
    unknown = []
    groups = defaultdict(list)
    for e in entries:
        groups[e.cell_key].append(e.row_id)
        triple = e.cell_key[:3]
        if e.mode is None and triple in triples:
            covered.update(k for k in cell_keys if k[:3] == triple)
        elif e.cell_key in cell_keys:
            covered.add(e.cell_key)
        else:
            unknown.append(e.row_id)

    missing = tuple(c for c in cells if c.key not in covered)
    dupes = tuple(sorted(tuple(sorted(rows)) for rows in groups.values() if len(rows) > 1))
    return CoverageReport(len(cells), missing, tuple(sorted(unknown)), dupes)
