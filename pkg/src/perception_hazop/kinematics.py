"""Cornering kinematics and lateral-acceleration limit checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import RejectedInput

NOMINAL = "nominal"
EMERGENCY = "emergency"
_REL_TOL = 1e-12


@dataclass(frozen=True)
class LateralLimits:
    """Maximum lateral acceleration (m/s^2) per regime."""

    nominal_max: float = 3.0
    emergency_max: float = 5.0

    def __post_init__(self):
        if not (0 < self.nominal_max <= self.emergency_max) or not math.isfinite(self.emergency_max):
            raise RejectedInput(
                f"need 0 < nominal_max <= emergency_max, got {self.nominal_max}, {self.emergency_max}"
            )

    def max_for(self, regime: str) -> float:
        if regime == NOMINAL:
            return self.nominal_max
        if regime == EMERGENCY:
            return self.emergency_max
        raise RejectedInput(f"unknown regime {regime!r}")


class LimitCheck(NamedTuple):
    within: bool
    excess: float = 0.0


def lateral_accel(v: float, r: float) -> float:
    """Lateral acceleration v^2/r of a vehicle at speed ``v`` on radius ``r``."""
    if not r > 0:
        raise RejectedInput(f"radius must be positive, got {r}")
    if v < 0:
        raise RejectedInput(f"speed must be non-negative, got {v}")
    return v * v / r


def max_speed_for_radius(r: float, a_max: float) -> float:
    if not r > 0 or not a_max > 0:
        raise RejectedInput(f"radius and a_max must be positive, got {r}, {a_max}")
    return math.sqrt(a_max * r)


def check_limit(a: float, limits: LateralLimits = LateralLimits(), regime: str = NOMINAL) -> LimitCheck:
    # boundary passes: the limit is "should not exceed"; the relative slack
    # absorbs rounding in v**2/r round trips
    bound = limits.max_for(regime)
    mag = abs(a)
    if mag <= bound * (1.0 + _REL_TOL):
        return LimitCheck(True, 0.0)
    return LimitCheck(False, mag - bound)
