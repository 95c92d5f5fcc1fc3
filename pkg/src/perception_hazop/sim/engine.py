"""Closed-loop fixed-step simulation and end-condition classification."""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..kinematics import EMERGENCY, check_limit
from .control import Controller, WorldObject
from .plant import PlantState, lateral_accel_actual, step_plant
from .scenario import (
    DEFAULT_PHYSICAL_RANGES,
    LANE_QUANTITIES,
    VEHICLE_WIDTH,
    ControllerConfig,
    InjectionSpec,
    Scenario,
    TrackerConfig,
    injection_to_dict,
    scenario_to_dict,
)
from .sensing import ChannelSensor, GroundTruth, PlausibilityGate
from .tracking import Tracker

CLASSIFICATIONS = (
    "success",
    "spurious_response",
    "missed_warning",
    "lateral_limit_violation",
    "lane_departure",
    "collision",
)
# distance from the lane edge at which the vehicle body counts as departed
LANE_DEPARTURE_MARGIN = VEHICLE_WIDTH / 2
MIN_GAP_CAP = 1000.0

TRACE_COLUMNS = (
    "t", "s", "v", "lateral_offset", "lateral_accel_cmd", "lateral_accel_actual",
    "gap_true", "gap_est", "rel_v_est", "target_class_est", "fcw", "aeb", "plausibility_reject",
)


def severity(classification: str) -> int:
    return CLASSIFICATIONS.index(classification)


@dataclass(frozen=True)
class SimOutcome:
    outcome_id: str
    classification: str
    time_of_event: Optional[float]
    min_gap: float
    max_abs_lateral_offset: float
    max_abs_lateral_accel: float
    plausibility_flags: int
    trace_path: str = ""
    fcw_fired: bool = False
    aeb_fired: bool = False

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.9f}"


def outcome_id_for(scenario: Scenario, injections: Sequence[InjectionSpec], tracker: TrackerConfig,
                   monitor: bool, config: ControllerConfig) -> str:
    blob = json.dumps({
        "scenario": scenario_to_dict(scenario),
        "injections": [injection_to_dict(i) for i in injections],
        "tracker": tracker.to_dict(),
        "monitor": monitor,
        "config": repr(config),
    }, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class _Recorder:
    def __init__(self, enabled: bool):
        self.buf = io.StringIO() if enabled else None
        if enabled:
            self.buf.write(",".join(TRACE_COLUMNS) + "\n")

    def row(self, *values):
        if self.buf is not None:
            self.buf.write(",".join(_fmt(v) for v in values) + "\n")

    def text(self) -> str:
        return self.buf.getvalue() if self.buf is not None else ""


def _validate(scenario: Scenario, injections: Sequence[InjectionSpec]):
    scenario.validate()
    for inj in injections:
        inj.validate(scenario)


def _true_threat_ttc(truth: GroundTruth, half_corridor: float) -> float:
    best = math.inf
    for _, gap, lat, rel_v, _cls in truth.relative():
        if gap > 0 and abs(lat) <= half_corridor and rel_v < 0:
            best = min(best, gap / -rel_v)
    return best


def simulate(scenario: Scenario, injections: Sequence[InjectionSpec] = (),
             tracker_config: TrackerConfig = TrackerConfig(), monitor_enabled: bool = False,
             config: ControllerConfig = ControllerConfig(), physical_ranges: Optional[dict] = None,
             trace: bool = True) -> tuple[SimOutcome, str]:
    """Run one scenario; return the outcome and the CSV trace text."""
    injections = list(injections)
    _validate(scenario, injections)
    dt = scenario.dt
    road = scenario.road_model
    ranges = {**DEFAULT_PHYSICAL_RANGES, **(physical_ranges or {})}

    sensors = []
    for ci, ch in enumerate(scenario.channels):
        own = [(i, inj) for i, inj in enumerate(injections) if inj.channel_id == ch.id]
        gate = None
        if monitor_enabled and ch.quantity in ranges:
            gate = PlausibilityGate(ranges[ch.quantity], config.hold_max)
        sensors.append((ch, ChannelSensor(ch, ci, own, scenario, scenario.seed), gate))
    has_lane = any(ch.quantity in LANE_QUANTITIES for ch in scenario.channels)
    has_present = any(ch.quantity == "target_present" for ch in scenario.channels)

    ego0 = scenario.ego_init
    state = PlantState(0.0, ego0.v, ego0.lateral_offset, 0.0)
    set_speed = ego0.set_speed if ego0.set_speed is not None else ego0.v
    ctrl = Controller(config, set_speed, dt)
    tracker = Tracker(tracker_config)
    rec = _Recorder(trace)
    targets = scenario.targets
    half_corridor = (VEHICLE_WIDTH + max((t.width for t in targets), default=0.0)) / 2

    min_gap = MIN_GAP_CAP
    max_off = 0.0
    max_lat = 0.0
    flags = 0
    event = None  # (classification, time)
    lat_violation_t = None
    spurious_t = None
    missed_t = None
    aeb_fired = False
    true_warning_due = None

    for k in range(scenario.n_steps + 1):
        t = k * dt
        truth = GroundTruth(t, state, targets, road)
        seg = road.segment_at(state.s)

        # end conditions on the current state
        gap_true = math.nan
        collided = False
        for (_, gap, lat, _rv, _c), tgt in zip(truth.relative(), targets):
            overlap = abs(lat) <= (VEHICLE_WIDTH + tgt.width) / 2
            if overlap:
                if gap > -tgt.length:
                    min_gap = min(min_gap, gap)
                if gap > 0 and (math.isnan(gap_true) or gap < gap_true):
                    gap_true = gap
                if -tgt.length < gap <= 0:
                    collided = True
        max_off = max(max_off, abs(state.y))
        if collided:
            event = ("collision", t)
        elif abs(state.y) > seg.lane_width / 2 - LANE_DEPARTURE_MARGIN:
            event = ("lane_departure", t)
        if event is not None or k == scenario.n_steps:
            # final state: no further control is applied
            rec.row(t, state.s, state.v, state.y, 0.0, -state.v * state.v * seg.curvature,
                    gap_true, None, None, "none", False, ctrl.aeb_latched, 0)
            break

        # perception
        readings = {}
        fault = False
        rejects = 0
        for ch, sensor, gate in sensors:
            m = sensor.sense(k, truth)
            if gate is not None:
                before = gate.rejects
                m = gate.filter(m)
                rejects += gate.rejects - before
                fault |= gate.fault and ch.quantity not in LANE_QUANTITIES
            readings.setdefault(ch.quantity, []).append(m.value)
        flags += rejects

        positions = _first(readings.get("target_range"), {})
        if has_present and not _first(readings.get("target_present"), {}):
            positions = {}  # detection gate: nothing reported present
        rel_vs = _first(readings.get("target_relative_velocity"), {})
        classes = _first(readings.get("target_class"), {})
        tracks = tracker.update(t, positions, classes)

        objects = []
        pred_vy = {}
        for oid, (gap, lat) in positions.items():
            tr = tracks[oid]
            objects.append(WorldObject(oid, gap, lat, rel_vs.get(oid), tr.velocity, tr.cls))
            pred_vy[oid] = tr.predicted_velocity[1]
        lane_offset = _first(readings.get("lane_lateral_offset"), None)
        lane_curv = _first(readings.get("lane_curvature"), None)

        d = ctrl.step(state.v, objects, lane_offset, lane_curv, has_lane, fault, pred_vy)
        if d.aeb_onset:
            aeb_fired = True
            if spurious_t is None and not _real_target_near(truth, state.v, config, dt):
                spurious_t = t
        if true_warning_due is None and _true_threat_ttc(truth, half_corridor) <= config.fcw_ttc:
            true_warning_due = t

        est = min(objects, key=lambda o: o.gap) if objects else None
        lat_act = lateral_accel_actual(d.controls, state, seg)
        max_lat = max(max_lat, abs(lat_act))
        if lat_violation_t is None and not check_limit(lat_act, config.limits, EMERGENCY).within:
            lat_violation_t = t
        rec.row(t, state.s, state.v, state.y, d.controls.lat_accel_cmd, lat_act, gap_true,
                est.gap if est else None, est.rel_v if est else None,
                (est.cls or "none") if est else "none", d.fcw, d.aeb, rejects)

        if d.lane_lost:
            missed_t = t
            break
        state = step_plant(state, d.controls, seg, dt)

    if missed_t is None and true_warning_due is not None and not ctrl.fcw_fired:
        missed_t = true_warning_due
    if event is not None:
        cls, t_event = event
    elif lat_violation_t is not None:
        cls, t_event = "lateral_limit_violation", lat_violation_t
    elif spurious_t is not None:
        cls, t_event = "spurious_response", spurious_t
    elif missed_t is not None:
        cls, t_event = "missed_warning", missed_t
    else:
        cls, t_event = "success", None

    outcome = SimOutcome(
        outcome_id=outcome_id_for(scenario, injections, tracker_config, monitor_enabled, config),
        classification=cls,
        time_of_event=None if t_event is None else round(t_event, 9),
        min_gap=min_gap,
        max_abs_lateral_offset=max_off,
        max_abs_lateral_accel=max_lat,
        plausibility_flags=flags,
        fcw_fired=ctrl.fcw_fired,
        aeb_fired=aeb_fired,
    )
    return outcome, rec.text()


def _first(values, default):
    return values[0] if values else default


def _real_target_near(truth: GroundTruth, v: float, cfg: ControllerConfig, dt: float) -> bool:
    """Whether some real object justifies braking now.

    An object justifies it when it is (or, at its true time to collision,
    will be) in the ego corridor and either lies within twice the stopping
    distance or is a genuine forward-collision threat.
    """
    reach = 2.0 * v * v / (2.0 * cfg.aeb_decel)
    ego = truth.ego
    for (_, gap, lat, rel_v, _c), tgt in zip(truth.relative(), truth.targets):
        if gap <= 0:
            continue
        corridor = (VEHICLE_WIDTH + tgt.width) / 2
        true_ttc = gap / -rel_v if rel_v < 0 else math.inf
        if gap > reach and true_ttc > cfg.fcw_ttc + dt:
            continue
        if abs(lat) <= corridor:
            return True
        if math.isfinite(true_ttc):
            _, y_then, _ = tgt.position(truth.t + true_ttc)
            if abs(y_then - (ego.y + ego.vy * true_ttc)) <= corridor:
                return True
    return False


def run(scenario: Scenario, injections: Sequence[InjectionSpec] = (),
        tracker_config: TrackerConfig = TrackerConfig(), monitor_enabled: bool = False,
        config: ControllerConfig = ControllerConfig(), physical_ranges: Optional[dict] = None,
        trace_path=None) -> SimOutcome:
    """Simulate and, when ``trace_path`` is given, write the CSV trace there."""
    outcome, text = simulate(scenario, injections, tracker_config, monitor_enabled, config,
                             physical_ranges, trace=trace_path is not None)
    if trace_path is not None:
        Path(trace_path).write_bytes(text.encode("utf-8"))
        outcome = SimOutcome(**{**outcome.to_dict(), "trace_path": str(trace_path)})
    return outcome
