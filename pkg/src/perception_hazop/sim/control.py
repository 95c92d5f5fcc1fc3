"""ACC, ALC, FCW and AEB control laws and the supervisory controller."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .plant import Controls
from .scenario import ControllerConfig


def clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def ttc(gap: float, closing_speed: float) -> float:
    """Time to collision; infinite unless closing."""
    if closing_speed <= 0:
        return math.inf
    return max(0.0, gap) / closing_speed


def acc_law(gap: float, v: float, rel_v: float, cfg: ControllerConfig = ControllerConfig()) -> float:
    """Gap/speed law; ``rel_v`` is target speed minus ego speed."""
    a = cfg.k_gap * (gap - cfg.headway * v) + cfg.k_v * rel_v
    return clamp(a, cfg.acc_min, cfg.acc_max)


def cruise_law(v: float, set_speed: float, cfg: ControllerConfig = ControllerConfig()) -> float:
    return clamp(cfg.k_set * (set_speed - v), cfg.acc_min, cfg.acc_max)


def alc_law(offset: float, offset_rate: float, v: float, curvature: float,
            cfg: ControllerConfig = ControllerConfig()) -> float:
    """PD on lateral offset plus the v^2 * curvature feedforward, clamped to the nominal limit."""
    cmd = -cfg.k_y * offset - cfg.k_dy * offset_rate + v * v * curvature
    lim = cfg.limits.nominal_max
    return clamp(cmd, -lim, lim)


def fcw_trigger(ttc_value: float, cfg: ControllerConfig = ControllerConfig()) -> bool:
    return ttc_value <= cfg.fcw_ttc


def aeb_trigger(ttc_value: float, cfg: ControllerConfig = ControllerConfig()) -> bool:
    # the boundary fires: 30 m at 20 m/s closing is 1.5 s and must brake
    return ttc_value <= cfg.aeb_ttc


@dataclass
class WorldObject:
    id: str
    gap: float
    lateral: float
    rel_v: Optional[float]          # measured; None when the channel has nothing
    velocity: Optional[tuple]       # tracker (vx, vy), relative
    cls: Optional[str]

    def closing_speed(self) -> float:
        # take the more pessimistic of measurement and track range-rate
        c = []
        if self.rel_v is not None:
            c.append(-self.rel_v)
        if self.velocity is not None:
            c.append(-self.velocity[0])
        return max(c) if c else 0.0

    def follow_rel_v(self) -> float:
        if self.rel_v is not None:
            return self.rel_v
        if self.velocity is not None:
            return self.velocity[0]
        return 0.0


@dataclass
class Decision:
    controls: Controls
    fcw: bool
    aeb: bool
    aeb_onset: bool
    lane_lost: bool
    lead: Optional[WorldObject]
    threat_ttc: float


class Controller:
    """Stateful supervisor combining ACC, ALC, FCW and AEB."""

    def __init__(self, cfg: ControllerConfig, set_speed: float, dt: float):
        self.cfg = cfg
        self.set_speed = set_speed
        self.dt = dt
        self.aeb_latched = False
        self._stopped_for = 0.0
        self._prev_offset = None
        self._lane_missing_for = 0.0
        self.fcw_fired = False

    def _in_path(self, obj: WorldObject, ttc_value: float, pred_vy: float) -> bool:
        half = self.cfg.lane_width / 2
        if abs(obj.lateral) <= half:
            return True
        if math.isinf(ttc_value):
            return False
        return abs(obj.lateral + pred_vy * ttc_value) <= half

    def step(self, v: float, objects, lane_offset, lane_curvature, lane_channels: bool,
             fault: bool, pred_vy: dict) -> Decision:
        cfg = self.cfg
        half = cfg.lane_width / 2

        lead = None
        threat = math.inf
        for obj in objects:
            if obj.gap <= 0:
                continue  # nothing can be ahead at a negative distance
            tt = ttc(obj.gap, obj.closing_speed())
            if abs(obj.lateral) <= half and (lead is None or obj.gap < lead.gap):
                lead = obj
            if self._in_path(obj, tt, pred_vy.get(obj.id, 0.0)):
                threat = min(threat, tt)

        a = cruise_law(v, self.set_speed, cfg)
        if lead is not None:
            a = min(a, acc_law(lead.gap, v, lead.follow_rel_v(), cfg))
        if fault:
            a = min(a, -cfg.fault_decel)

        fcw = fcw_trigger(threat, cfg)
        self.fcw_fired |= fcw
        onset = False
        if not self.aeb_latched and (aeb_trigger(threat, cfg) or (fcw and cfg.fcw_escalates)):
            self.aeb_latched = True
            self._stopped_for = 0.0
            onset = True
        if self.aeb_latched:
            a = -cfg.aeb_decel
            if v <= 0.0:
                self._stopped_for += self.dt
                # release only once held long enough and nothing is left in the lane
                if self._stopped_for >= cfg.aeb_hold - 1e-9 and lead is None:
                    self.aeb_latched = False

        lane_lost = False
        if lane_offset is None:
            lat = 0.0
            self._prev_offset = None
        else:
            rate = 0.0 if self._prev_offset is None else (lane_offset - self._prev_offset) / self.dt
            self._prev_offset = lane_offset
            lat = alc_law(lane_offset, rate, v, lane_curvature or 0.0, cfg)
        if lane_channels and lane_offset is None and lane_curvature is None:
            self._lane_missing_for += self.dt
            lane_lost = self._lane_missing_for > cfg.lane_loss_timeout + 1e-9
        else:
            self._lane_missing_for = 0.0

        return Decision(Controls(a, lat), fcw, self.aeb_latched, onset, lane_lost, lead, threat)
