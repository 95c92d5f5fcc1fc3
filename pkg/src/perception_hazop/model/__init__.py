"""Decomposition hierarchy, guideword sets and failure taxonomy."""

from .guidewords import ClassicalGuideword, Guideword
from .system import (
    CONTROLS, MODALITIES, PARAMETER_KINDS, QUANTITIES,
    Capability, DataSource, Function, Implementation, Parameter, Service, SystemModel,
    ValidationReport, Violation,
    load_model, model_from_dict, model_to_dict, validate_model,
)
from .taxonomy import (
    TAXONOMY, DecisionFailure, FailureLabel, PerceptionFailure, SensingFailure,
    UnderstandingFailure, classify_failure,
)

__all__ = [
    "Guideword", "ClassicalGuideword",
    "SystemModel", "Service", "Capability", "Function", "Parameter", "Implementation", "DataSource",
    "ValidationReport", "Violation", "validate_model", "model_from_dict", "model_to_dict", "load_model",
    "CONTROLS", "MODALITIES", "PARAMETER_KINDS", "QUANTITIES",
    "TAXONOMY", "SensingFailure", "PerceptionFailure", "UnderstandingFailure", "DecisionFailure",
    "FailureLabel", "classify_failure",
]
