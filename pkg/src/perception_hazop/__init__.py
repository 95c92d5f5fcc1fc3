"""HAZOP analysis of perception failures in automated driving functions.

The package holds a system decomposition model, HAZOP worksheets with lint
rules, coverage enumeration, kinematic limit checks, a closed-loop
fault-injection simulator and a campaign runner that ties simulation
outcomes back to worksheet rows.
"""

from importlib import resources

from .errors import DocumentError, RejectedInput
from .model import Guideword, SystemModel, load_model, validate_model

__version__ = "0.1.0"


def data_path(*parts: str):
    """Path to a shipped fixture, e.g. ``data_path("worksheets", "acc.json")``."""
    return resources.files(__name__).joinpath("data", *parts)


__all__ = [
    "DocumentError", "RejectedInput", "Guideword", "SystemModel", "load_model", "validate_model",
    "data_path", "__version__",
]
