"""Sensor channels: gating, noise, guideword-shaped injections, latency, monitor.

Lane channels carry a scalar (or ``None`` for no detection). Target
channels carry a mapping from object id to value; an empty mapping is no
detection. Real targets are ``T<index>``; injected phantoms are ``P...``.
Range values are ``(gap, lateral)`` pairs so a sign flip negates both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

import numpy as np

from ..model import Guideword
from .plant import PlantState
from .scenario import (
    DEFAULT_SPURIOUS_TARGET,
    InjectionSpec,
    Road,
    Scenario,
    SensorChannel,
    Target,
)

FOV_HALF_ANGLE = math.radians(30.0)
_TAN_FOV = math.tan(FOV_HALF_ANGLE)
_EPS = 1e-9


@dataclass(frozen=True)
class Measurement:
    t: float
    quantity: str
    value: Any  # None / {} for no detection

    @property
    def detected(self) -> bool:
        return bool(self.value) if isinstance(self.value, dict) else self.value is not None


class GroundTruth:
    """Scene at one instant; targets are evaluated lazily and cached."""

    def __init__(self, t: float, ego: PlantState, targets, road: Road):
        self.t = t
        self.ego = ego
        self.targets = targets
        self.road = road
        self._cache: dict[float, list] = {}

    def relative(self, dt_ahead: float = 0.0):
        """``[(id, gap, lateral, rel_v, cls)]`` with the ego extrapolated at constant velocity."""
        if dt_ahead in self._cache:
            return self._cache[dt_ahead]
        t = self.t + dt_ahead
        ego = self.ego
        s_e = ego.s + ego.v * dt_ahead
        y_e = ego.y + ego.vy * dt_ahead
        out = []
        for i, tgt in enumerate(self.targets):
            x, y, v = tgt.position(t)
            out.append((f"T{i}", x - s_e, y - y_e, v - ego.v, tgt.cls))
        self._cache[dt_ahead] = out
        return out


def _visible(channel: SensorChannel, gap: float, lat: float) -> bool:
    if not 0.0 < gap <= channel.max_range:
        return False
    return not channel.fov_check or abs(lat) <= gap * _TAN_FOV


def observe(truth: GroundTruth, channel: SensorChannel, dt_ahead: float = 0.0):
    """Noise-free reading of ``truth`` as seen by ``channel``."""
    q = channel.quantity
    ego = truth.ego
    if q == "lane_lateral_offset":
        return ego.y + ego.vy * dt_ahead
    if q == "lane_curvature":
        return truth.road.curvature_at(ego.s + ego.v * dt_ahead)
    out = {}
    for tid, gap, lat, rel_v, cls in truth.relative(dt_ahead):
        if not _visible(channel, gap, lat):
            continue
        if q == "target_range":
            out[tid] = (gap, lat)
        elif q == "target_relative_velocity":
            out[tid] = rel_v
        elif q == "target_class":
            out[tid] = cls
        else:
            out[tid] = True
    return out


def add_noise(value, channel: SensorChannel, rng: np.random.Generator):
    if channel.noise_sd <= 0 or value is None:
        return value
    sd = channel.noise_sd
    if isinstance(value, dict):
        if channel.quantity == "target_range":
            return {k: (g + sd * rng.standard_normal(), y + sd * rng.standard_normal()) for k, (g, y) in value.items()}
        if channel.quantity == "target_relative_velocity":
            return {k: v + sd * rng.standard_normal() for k, v in value.items()}
        return value
    return value + sd * rng.standard_normal()


def _scale(value, factor):
    if value is None:
        return None
    if isinstance(value, dict):
        return {k: (_scale(v, factor)) for k, v in value.items()}
    if isinstance(value, tuple):
        return tuple(x * factor for x in value)
    return value * factor


def _empty(channel: SensorChannel):
    return None if channel.is_lane else {}


class ActiveInjection:
    """One injection bound to a channel, with its own RNG stream and state."""

    def __init__(self, spec: InjectionSpec, index: int, scenario: Scenario, channel: SensorChannel, seed: int):
        self.spec = spec
        self.index = index
        self.gw = spec.guideword
        self.params = spec.params()
        self.t0, self.t1 = spec.resolved_window(scenario)
        self.channel = channel
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, index)))
        if self.gw is Guideword.Intermittent:
            self.period_steps = max(1, int(round(self.params["period"] / scenario.dt)))
            self.on_steps = int(round(self.params["duty"] * self.period_steps))
            self.phase_steps = int(rng.integers(self.period_steps))
            mode = self.params["mode"]
            self.mode = mode or ("flicker" if channel.quantity == "target_class" else "dropout")
        self.phantom: Optional[Target] = spec.spurious_target or DEFAULT_SPURIOUS_TARGET
        self._anchor: Optional[float] = None  # road position of the phantom origin

    def active(self, t: float) -> bool:
        return self.t0 - _EPS <= t <= self.t1 + _EPS

    def on_phase(self, step: int) -> bool:
        return (step + self.phase_steps) % self.period_steps < self.on_steps

    def _phantom_reading(self, truth: GroundTruth):
        # the phantom is anchored ahead of the ego at first activation and then
        # behaves like a real object in the road frame
        if self._anchor is None:
            self._anchor = truth.ego.s
        x, y, _ = self.phantom.position(truth.t - self.t0, origin=self._anchor)
        return x - truth.ego.s, y - truth.ego.y

    def apply(self, value, step: int, truth: GroundTruth):
        gw = self.gw
        q = self.channel.quantity
        p = self.params
        if gw is Guideword.NoOrNot:
            return _empty(self.channel)
        if gw in (Guideword.More, Guideword.Less):
            if q == "target_present":
                value = dict(value)
                if gw is Guideword.More:
                    for j in range(p["k"]):
                        value[f"P{self.index}.{j}"] = True
                else:
                    for tid in sorted(value)[: p["k"]]:
                        del value[tid]
                return value
            return _scale(value, 1.0 + p["delta"] if gw is Guideword.More else 1.0 - p["delta"])
        if gw is Guideword.AsWellAs:
            value = dict(value)
            pid = f"P{self.index}"
            if q == "target_range":
                value[pid] = self._phantom_reading(truth)
            else:
                value[pid] = True
            return value
        if gw is Guideword.PartOf:
            drop = {f"T{i}" for i in p["drop"]}
            return {k: v for k, v in value.items() if k not in drop}
        if gw is Guideword.OtherThanInstead:
            src, dst = p["from"], p["to"]
            return {k: (dst if src is None or v == src else v) for k, v in value.items()}
        if gw is Guideword.Reverse:
            return _scale(value, -1.0)
        if gw is Guideword.Intermittent:
            if self.on_phase(step):
                return value
            if self.mode == "flicker" and isinstance(value, dict):
                return {k: p["flicker_class"] for k in value}
            return _empty(self.channel)
        return value  # Early / Late act on timing, not value


class ChannelSensor:
    """Stateful sensor channel: gating, noise, injections, then a FIFO delay."""

    def __init__(self, channel: SensorChannel, channel_index: int, injections, scenario: Scenario, seed: int):
        self.channel = channel
        self.dt = scenario.dt
        self.injections = [
            ActiveInjection(spec, idx, scenario, channel, seed) for idx, spec in injections
        ]
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, channel_index)))
        self._history: list = []

    def sense(self, step: int, truth: GroundTruth) -> Measurement:
        t = truth.t
        active = [a for a in self.injections if a.active(t)]
        early = sum(a.params["dt"] for a in active if a.gw is Guideword.Early)
        late = sum(a.params["dt"] for a in active if a.gw is Guideword.Late)

        value = observe(truth, self.channel, early)
        value = add_noise(value, self.channel, self.rng)
        for a in active:
            value = a.apply(value, step, truth)
        self._history.append(value)

        delay = int(round((self.channel.latency + late) / self.dt))
        k = step - delay
        out = self._history[k] if k >= 0 else _empty(self.channel)
        return Measurement(t, self.channel.quantity, out)


def sense(ground_truth: GroundTruth, channel: SensorChannel, injections_active=(), rng=None,
          step: int = 0) -> Measurement:
    """Single-sample reading without the latency buffer.

    Useful for open-loop checks: applies gating, noise and the value-shaping
    injections (``Early`` shifts the truth lookup, ``Late`` is ignored here).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    early = sum(a.params["dt"] for a in injections_active if a.gw is Guideword.Early)
    value = observe(ground_truth, channel, early)
    value = add_noise(value, channel, rng)
    for a in injections_active:
        value = a.apply(value, step, ground_truth)
    return Measurement(ground_truth.t, channel.quantity, value)


# ---------------------------------------------------------------------------
# plausibility


class Verdict(NamedTuple):
    accepted: bool
    reason: Optional[str] = None


ACCEPT = Verdict(True)


def _magnitude(value) -> float:
    return value[0] if isinstance(value, tuple) else value


def plausibility_monitor(measurement, parameter_range) -> Verdict:
    """Physical-range check on a scalar (or the gap of a range pair)."""
    lo, hi = parameter_range
    x = _magnitude(measurement.value if isinstance(measurement, Measurement) else measurement)
    if x < lo:
        return Verdict(False, "below-physical-min")
    if x > hi:
        return Verdict(False, "above-physical-max")
    return ACCEPT


class PlausibilityGate:
    """Per-channel monitor: rejected samples are replaced by the last accepted
    value for at most ``hold_max`` seconds, then dropped."""

    def __init__(self, parameter_range, hold_max: float = 0.5):
        self.range = parameter_range
        self.hold_max = hold_max
        self._last: dict[Any, tuple[float, Any]] = {}
        self.rejects = 0
        self.fault = False

    def _one(self, key, value, t):
        if plausibility_monitor(value, self.range).accepted:
            self._last[key] = (t, value)
            return value
        self.rejects += 1
        self.fault = True
        held = self._last.get(key)
        if held is not None and t - held[0] <= self.hold_max + _EPS:
            return held[1]
        return None

    def filter(self, m: Measurement) -> Measurement:
        self.fault = False
        if m.value is None or (isinstance(m.value, dict) and not m.value):
            return m
        if not isinstance(m.value, dict):
            return Measurement(m.t, m.quantity, self._one(None, m.value, m.t))
        out = {}
        for key, v in m.value.items():
            kept = self._one(key, v, m.t)
            if kept is not None:
                out[key] = kept
        return Measurement(m.t, m.quantity, out)
