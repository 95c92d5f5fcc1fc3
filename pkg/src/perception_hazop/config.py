"""Loading of the optional JSON configuration (limits and controller defaults).

Keys may be nested (``{"lateral": {"nominal_max": 2.5}}``) or dotted
(``{"lateral.nominal_max": 2.5}``). Controller settings live under
``controller``.
"""

from __future__ import annotations

from .documents import DocumentError, read_json
from .errors import RejectedInput
from .sim import ControllerConfig


def flatten(obj: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, name + "."))
        else:
            out[name] = value
    return out


def config_from_dict(data: dict) -> ControllerConfig:
    flat = flatten(data)
    for key, value in flat.items():
        if isinstance(value, bool) and not key.endswith("fcw_escalates"):
            raise RejectedInput(f"{key}: expected a number")
    return ControllerConfig.from_mapping(flat)


def load_config(path) -> ControllerConfig:
    data = read_json(path)
    if not isinstance(data, dict):
        raise DocumentError("configuration must be a JSON object", path=path, pointer="/")
    try:
        return config_from_dict(data)
    except (RejectedInput, ValueError, TypeError) as exc:
        raise DocumentError(str(exc), path=path, pointer="/") from None
