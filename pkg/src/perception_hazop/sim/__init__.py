"""Closed-loop simulation of lane keeping with perception fault injection."""

from .control import Controller, WorldObject, acc_law, aeb_trigger, alc_law, cruise_law, fcw_trigger, ttc
from .engine import CLASSIFICATIONS, TRACE_COLUMNS, SimOutcome, run, severity, simulate
from .plant import Controls, PlantState, lateral_accel_actual, step_plant
from .scenario import (
    DEFAULT_PHYSICAL_RANGES,
    MAGNITUDE_DEFAULTS,
    STANDARD_CHANNELS,
    SUPPORTED_QUANTITIES,
    ControllerConfig,
    EgoInit,
    InjectionSpec,
    LateralPath,
    Road,
    Scenario,
    Segment,
    SensorChannel,
    Target,
    TrackerConfig,
    injection_from_dict,
    injection_to_dict,
    load_injections,
    load_scenario,
    resolve_magnitude,
    scenario_from_dict,
    scenario_to_dict,
    supports,
)
from .sensing import (
    ActiveInjection,
    ChannelSensor,
    GroundTruth,
    Measurement,
    PlausibilityGate,
    Verdict,
    plausibility_monitor,
    sense,
)
from .tracking import TrackState, Tracker, track
