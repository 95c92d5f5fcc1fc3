"""Point-mass ego vehicle in road (curvilinear) coordinates, explicit Euler."""

from __future__ import annotations

from typing import NamedTuple

from .scenario import Segment

LONG_ACCEL_MIN = -9.81
LONG_ACCEL_MAX = 3.0


class PlantState(NamedTuple):
    s: float           # distance along the road, m
    v: float           # speed, m/s
    y: float           # lateral offset from lane centre, m (left positive)
    vy: float          # lateral velocity, m/s


class Controls(NamedTuple):
    long_accel: float = 0.0
    lat_accel_cmd: float = 0.0


def lateral_accel_actual(controls: Controls, state: PlantState, segment: Segment) -> float:
    # the lane bends away under the vehicle at v^2 * curvature
    return controls.lat_accel_cmd - state.v * state.v * segment.curvature


def step_plant(state: PlantState, controls: Controls, segment: Segment, dt: float) -> PlantState:
    a = min(LONG_ACCEL_MAX, max(LONG_ACCEL_MIN, controls.long_accel))
    lat = lateral_accel_actual(controls, state, segment)
    return PlantState(
        s=state.s + state.v * dt,
        v=max(0.0, state.v + a * dt),
        y=state.y + state.vy * dt,
        vy=state.vy + lat * dt,
    )
