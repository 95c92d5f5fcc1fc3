"""Loading and writing of the versioned JSON documents.

Every document is a UTF-8 JSON object with ``schema_version`` set to ``"1"``
and exactly one payload key (``model``, ``usecases``, ``worksheet``,
``scenario``, ``injections`` or ``campaign``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import DocumentError

SCHEMA_VERSION = "1"
PAYLOAD_KEYS = ("model", "usecases", "worksheet", "scenario", "injections", "campaign")


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read file: {exc.strerror or exc}", path=path) from exc
    except UnicodeDecodeError as exc:
        raise DocumentError("file is not valid UTF-8", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, path=path, line=exc.lineno, column=exc.colno) from exc


def load_document(path, expected: str | None = None) -> tuple[str, Any]:
    """Read a document and return ``(kind, payload)``."""
    data = read_json(path)
    return split_document(data, expected=expected, path=path)


def split_document(data: Any, expected: str | None = None, path=None) -> tuple[str, Any]:
    if not isinstance(data, dict):
        raise DocumentError("top level must be a JSON object", path=path, pointer="/")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DocumentError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})",
            path=path, pointer="/schema_version",
        )
    kinds = [k for k in PAYLOAD_KEYS if k in data]
    if len(kinds) != 1:
        raise DocumentError(
            f"expected exactly one of {', '.join(PAYLOAD_KEYS)}; found {kinds or 'none'}",
            path=path, pointer="/",
        )
    kind = kinds[0]
    if expected is not None and kind != expected:
        raise DocumentError(f"expected a {expected} document, got {kind}", path=path, pointer="/")
    return kind, data[kind]


def make_document(kind: str, payload: Any) -> dict:
    return {"schema_version": SCHEMA_VERSION, kind: payload}


def dumps(obj: Any) -> str:
    """Stable JSON text: sorted keys, two-space indent, LF endings, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_bytes(dumps(obj).encode("utf-8"))


class Fields:
    """Small helper for pulling typed fields out of a parsed JSON object.

    Errors carry the pointer of the offending field so CLI diagnostics can
    name it.
    """

    def __init__(self, obj: Any, pointer: str, path=None):
        if not isinstance(obj, dict):
            raise DocumentError("expected an object", path=path, pointer=pointer or "/")
        self.obj = obj
        self.pointer = pointer
        self.path = path

    def _err(self, key, msg):
        return DocumentError(msg, path=self.path, pointer=f"{self.pointer}/{key}")

    def child(self, key) -> "Fields":
        return Fields(self.req(key), f"{self.pointer}/{key}", self.path)

    def at(self, key, index) -> str:
        return f"{self.pointer}/{key}/{index}"

    def req(self, key):
        if key not in self.obj:
            raise self._err(key, "missing required field")
        return self.obj[key]

    def get(self, key, default=None):
        return self.obj.get(key, default)

    def str(self, key, default=None, required=True) -> str:
        if key not in self.obj:
            if required and default is None:
                raise self._err(key, "missing required field")
            return default
        value = self.obj[key]
        if not isinstance(value, str):
            raise self._err(key, "expected a string")
        return value

    def num(self, key, default=None) -> float:
        if key not in self.obj:
            if default is None:
                raise self._err(key, "missing required field")
            return float(default)
        value = self.obj[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self._err(key, "expected a number")
        return float(value)

    def int(self, key, default=None) -> int:
        if key not in self.obj:
            if default is None:
                raise self._err(key, "missing required field")
            return default
        value = self.obj[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise self._err(key, "expected an integer")
        return value

    def bool(self, key, default=None) -> bool:
        if key not in self.obj:
            if default is None:
                raise self._err(key, "missing required field")
            return default
        value = self.obj[key]
        if not isinstance(value, bool):
            raise self._err(key, "expected true or false")
        return value

    def list(self, key, default=None) -> list:
        if key not in self.obj:
            if default is None:
                raise self._err(key, "missing required field")
            return list(default)
        value = self.obj[key]
        if not isinstance(value, list):
            raise self._err(key, "expected a list")
        return value

    def str_list(self, key, default=None) -> list[str]:
        items = self.list(key, default)
        for i, item in enumerate(items):
            if not isinstance(item, str):
                raise DocumentError("expected a string", path=self.path, pointer=self.at(key, i))
        return items

    def dict(self, key, default=None) -> dict:
        if key not in self.obj:
            if default is None:
                raise self._err(key, "missing required field")
            return dict(default)
        value = self.obj[key]
        if not isinstance(value, dict):
            raise self._err(key, "expected an object")
        return value
