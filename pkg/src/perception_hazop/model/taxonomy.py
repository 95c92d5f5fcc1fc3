"""Failure taxonomy for the sense/perceive/understand/decide chain."""

from __future__ import annotations

import enum
from typing import Mapping, NamedTuple

from ..errors import RejectedInput


class SensingFailure(enum.Enum):
    NonFunctional = "sensor is non-functional"
    Degraded = "sensor is functioning but degraded"
    Malfunctioning = "sensor is malfunctioning"


class PerceptionFailure(enum.Enum):
    UnrecognisedSensorFailure = "sensor failure, degradation or malfunction is not recognised"
    NotDetected = "object in field of view is not detected"
    NotClassified = "object detected but not classified, presence rejected"
    Misclassification = "object detected but misclassified"
    Illusion = "object detected where none exists, or its nature grossly misinterpreted"


class UnderstandingFailure(enum.Enum):
    UnrecognisedPerceptionFailure = "perception failure is not recognised"
    ConflictBetweenSensors = "perception of different sensor units disagrees"
    ConflictWithInternalLaw = "perception conflicts with an on-board rule or limit"
    ConflictWithInternalData = "perception conflicts with on-board data such as maps"


class DecisionFailure(enum.Enum):
    ConflictDecisionVsUnderstanding = "decision overrides the developed understanding"


TAXONOMY = {
    "sensing": SensingFailure,
    "perception": PerceptionFailure,
    "understanding": UnderstandingFailure,
    "decision": DecisionFailure,
}


class FailureLabel(NamedTuple):
    layer: str
    category: enum.Enum

    def __str__(self):
        return f"{self.layer}/{self.category.name}"


def _flag(evidence, key):
    """Tri-state read of a boolean evidence field (None when absent)."""
    value = evidence.get(key)
    if value is None:
        return None
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes")
    return bool(value)


_CONFLICT_KEYWORDS = (
    # checked in order; first hit wins
    (("sensor", "radar", "camera", "lidar"), UnderstandingFailure.ConflictBetweenSensors),
    (("law", "rule", "regulation", "limit"), UnderstandingFailure.ConflictWithInternalLaw),
    (("map", "data", "database"), UnderstandingFailure.ConflictWithInternalData),
)


def classify_failure(observation: Mapping) -> FailureLabel:
    """Map a flat observation record onto one taxonomy category.

    The record must carry ``layer``; the remaining keys are evidence. Each
    layer has a fixed precedence, and when no evidence field singles out a
    category the layer's catch-all is returned (``Malfunctioning``,
    ``Misclassification``, ``UnrecognisedPerceptionFailure``).

    sensing
        ``output_present`` false -> NonFunctional; ``degraded`` true -> Degraded.
    perception
        ``failure_recognised`` false -> UnrecognisedSensorFailure;
        ``object_exists`` false -> Illusion; ``detected`` false -> NotDetected;
        ``classified`` false -> NotClassified.
    understanding
        ``conflict_with`` naming a sensor, a law/limit or a map/data source.
    decision
        always ConflictDecisionVsUnderstanding.
    """
    layer = str(observation.get("layer", "")).strip().lower()
    if layer not in TAXONOMY:
        raise RejectedInput(f"unknown failure layer {observation.get('layer')!r}")

    if layer == "sensing":
        if _flag(observation, "output_present") is False:
            cat = SensingFailure.NonFunctional
        elif _flag(observation, "degraded"):
            cat = SensingFailure.Degraded
        else:
            cat = SensingFailure.Malfunctioning
    elif layer == "perception":
        if _flag(observation, "failure_recognised") is False:
            cat = PerceptionFailure.UnrecognisedSensorFailure
        elif _flag(observation, "object_exists") is False:
            cat = PerceptionFailure.Illusion
        elif _flag(observation, "detected") is False:
            cat = PerceptionFailure.NotDetected
        elif _flag(observation, "classified") is False:
            cat = PerceptionFailure.NotClassified
        else:
            cat = PerceptionFailure.Misclassification
    elif layer == "understanding":
        cat = UnderstandingFailure.UnrecognisedPerceptionFailure
        target = str(observation.get("conflict_with") or "").lower()
        for words, candidate in _CONFLICT_KEYWORDS:
            if any(w in target for w in words):
                cat = candidate
                break
    else:
        cat = DecisionFailure.ConflictDecisionVsUnderstanding
    return FailureLabel(layer, cat)
