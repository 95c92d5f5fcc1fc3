"""Scenario, sensor-channel, injection and controller configuration types."""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

from ..documents import DocumentError, Fields, load_document
from ..errors import RejectedInput
from ..kinematics import LateralLimits
from ..model import Guideword, QUANTITIES

VEHICLE_WIDTH = 1.8
TARGET_CLASSES = ("vehicle", "pedestrian", "static")
# (width, length) in metres
TARGET_SIZE = {"vehicle": (1.8, 4.5), "pedestrian": (0.6, 0.5), "static": (1.0, 0.5)}

LANE_QUANTITIES = ("lane_lateral_offset", "lane_curvature")
TARGET_QUANTITIES = ("target_range", "target_relative_velocity", "target_class", "target_present")
SCALAR_QUANTITIES = ("target_range", "target_relative_velocity", "lane_lateral_offset", "lane_curvature")

# physical ranges used by the plausibility monitor when the model gives none
DEFAULT_PHYSICAL_RANGES = {
    "target_range": (0.0, 250.0),
    "target_relative_velocity": (-70.0, 70.0),
    "lane_lateral_offset": (-5.0, 5.0),
    "lane_curvature": (-0.1, 0.1),
}


@dataclass(frozen=True)
class Segment:
    length: float
    curvature: float = 0.0
    lane_width: float = 3.5


class Road:
    """Piecewise-constant-curvature road; the last segment extends forever."""

    def __init__(self, segments):
        self.segments = tuple(segments)
        self._starts = []
        s = 0.0
        for seg in self.segments:
            self._starts.append(s)
            s += seg.length
        self.length = s

    def index_at(self, s: float) -> int:
        return max(0, bisect.bisect_right(self._starts, s) - 1)

    def segment_at(self, s: float) -> Segment:
        return self.segments[self.index_at(s)]

    def curvature_at(self, s: float) -> float:
        return self.segment_at(s).curvature


@dataclass(frozen=True)
class LateralPath:
    """Straight-line lateral motion: y(t) = y0 + vy * max(0, t - t_start)."""

    y0: float
    vy: float
    t_start: float = 0.0

    def at(self, t: float) -> float:
        return self.y0 + self.vy * max(0.0, t - self.t_start)


@dataclass(frozen=True)
class Target:
    cls: str
    initial_gap: float
    v: float
    lateral_offset: float = 0.0
    lateral_path: Optional[LateralPath] = None
    accel: float = 0.0
    accel_start: float = 0.0

    @property
    def width(self) -> float:
        return TARGET_SIZE[self.cls][0]

    @property
    def length(self) -> float:
        return TARGET_SIZE[self.cls][1]

    def position(self, t: float, origin: float = 0.0) -> tuple[float, float, float]:
        """Road-frame (s, y, speed) at time ``t``; speed never goes negative."""
        if self.accel == 0.0 or t <= self.accel_start:
            x = origin + self.initial_gap + self.v * t
            v = self.v
        else:
            ta = self.accel_start
            x = origin + self.initial_gap + self.v * ta
            tau = t - ta
            a = self.accel
            if a < 0 and self.v + a * tau < 0:
                tau = -self.v / a
            x += self.v * tau + 0.5 * a * tau * tau
            v = max(0.0, self.v + a * (t - ta))
        y = self.lateral_path.at(t) if self.lateral_path else self.lateral_offset
        return x, y, v


@dataclass(frozen=True)
class EgoInit:
    v: float
    lateral_offset: float = 0.0
    set_speed: Optional[float] = None


@dataclass(frozen=True)
class SensorChannel:
    id: str
    source_modality: str
    quantity: str
    latency: float = 0.0
    noise_sd: float = 0.0
    range_max: Optional[float] = None
    fov_check: bool = True

    @property
    def max_range(self) -> float:
        if self.range_max is not None:
            return self.range_max
        return 150.0 if self.source_modality == "radar" else 80.0

    @property
    def is_lane(self) -> bool:
        return self.quantity in LANE_QUANTITIES


STANDARD_CHANNELS = (
    SensorChannel("rdr_range", "radar", "target_range"),
    SensorChannel("rdr_relvel", "radar", "target_relative_velocity"),
    SensorChannel("rdr_present", "radar", "target_present"),
    SensorChannel("cam_class", "camera", "target_class"),
    SensorChannel("cam_lane_offset", "camera", "lane_lateral_offset"),
    SensorChannel("cam_lane_curvature", "camera", "lane_curvature"),
)


@dataclass(frozen=True)
class Scenario:
    usecase_id: str
    duration: float
    road: tuple[Segment, ...]
    ego_init: EgoInit
    targets: tuple[Target, ...] = ()
    dt: float = 0.01
    seed: int = 0
    channels: tuple[SensorChannel, ...] = STANDARD_CHANNELS

    @functools.cached_property
    def road_model(self) -> Road:
        return Road(self.road)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def channel(self, channel_id: str) -> Optional[SensorChannel]:
        return next((c for c in self.channels if c.id == channel_id), None)

    def validate(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise RejectedInput(f"dt must be positive, got {self.dt}")
        if not self.duration >= self.dt:
            raise RejectedInput(f"duration {self.duration} shorter than dt {self.dt}")
        if not self.road:
            raise RejectedInput("road has no segments")
        for seg in self.road:
            if not math.isfinite(seg.curvature):
                raise RejectedInput("segment curvature must be finite")
            if not seg.length > 0:
                raise RejectedInput("segment length must be positive")
            if not seg.lane_width > VEHICLE_WIDTH:
                raise RejectedInput(f"lane width {seg.lane_width} not wider than the vehicle")
        if not 0 <= self.seed < 2 ** 64:
            raise RejectedInput("seed must be an unsigned 64-bit integer")
        for tgt in self.targets:
            if tgt.cls not in TARGET_CLASSES:
                raise RejectedInput(f"unknown target class {tgt.cls!r}")
        ids = [c.id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise RejectedInput("duplicate channel id")
        for c in self.channels:
            if c.quantity not in QUANTITIES:
                raise RejectedInput(f"channel {c.id}: unknown quantity {c.quantity!r}")
            if c.source_modality not in ("camera", "radar"):
                raise RejectedInput(f"channel {c.id}: modality must be camera or radar")
            if c.latency < 0 or c.noise_sd < 0:
                raise RejectedInput(f"channel {c.id}: latency and noise_sd must be non-negative")


@dataclass(frozen=True)
class TrackerConfig:
    discard_history_on_reclass: bool = False
    history_horizon: float = 2.0

    def __post_init__(self):
        if not self.history_horizon > 0:
            raise RejectedInput("history_horizon must be positive")

    def to_dict(self):
        return {"discard_history_on_reclass": self.discard_history_on_reclass,
                "history_horizon": self.history_horizon}

    @classmethod
    def from_dict(cls, d):
        f = Fields(d, "/tracker")
        return cls(f.bool("discard_history_on_reclass", False), f.num("history_horizon", 2.0))


@dataclass(frozen=True)
class ControllerConfig:
    headway: float = 1.8            # s
    k_gap: float = 0.23             # 1/s^2
    k_v: float = 0.6                # 1/s
    k_set: float = 0.4              # 1/s, cruise speed hold
    acc_min: float = -3.5           # m/s^2
    acc_max: float = 2.0            # m/s^2
    fcw_ttc: float = 2.5            # s
    aeb_ttc: float = 1.5            # s
    aeb_decel: float = 6.0          # m/s^2
    aeb_hold: float = 1.0           # s at standstill before release
    # an unanswered forward collision warning escalates to emergency braking
    fcw_escalates: bool = True
    k_y: float = 0.8                # 1/s^2
    k_dy: float = 1.6               # 1/s
    lane_width: float = 3.5         # m, corridor used for in-path tests
    lane_loss_timeout: float = 0.5  # s
    fault_decel: float = 2.0        # m/s^2 while a plausibility fault is active
    hold_max: float = 0.5           # s, monitor hold of last accepted value
    limits: LateralLimits = field(default_factory=LateralLimits)

    @classmethod
    def from_mapping(cls, data: dict) -> "ControllerConfig":
        """Build from a flat mapping; ``lateral.nominal_max`` style keys set the limits."""
        names = {f.name for f in fields(cls)} - {"limits"}
        kwargs: dict[str, Any] = {}
        nominal = emergency = None
        for key, value in data.items():
            if key == "lateral.nominal_max":
                nominal = float(value)
            elif key == "lateral.emergency_max":
                emergency = float(value)
            elif key.startswith("controller."):
                name = key.split(".", 1)[1]
                if name not in names:
                    raise RejectedInput(f"unknown controller setting {name!r}")
                kwargs[name] = type(getattr(cls, name))(value)
            else:
                raise RejectedInput(f"unknown configuration key {key!r}")
        base = LateralLimits()
        kwargs["limits"] = LateralLimits(
            nominal if nominal is not None else base.nominal_max,
            emergency if emergency is not None else base.emergency_max,
        )
        return cls(**kwargs)

    def with_limits(self, limits: LateralLimits) -> "ControllerConfig":
        return replace(self, limits=limits)


# ---------------------------------------------------------------------------
# injections

# parameter block defaults per guideword; "window" is handled separately
MAGNITUDE_DEFAULTS: dict[Guideword, dict[str, Any]] = {
    Guideword.NoOrNot: {},
    Guideword.More: {"delta": 0.3, "k": 2},
    Guideword.Less: {"delta": 0.3, "k": 2},
    Guideword.AsWellAs: {},
    Guideword.PartOf: {"drop": [0]},
    Guideword.OtherThanInstead: {"from": None, "to": "static"},
    Guideword.Reverse: {},
    Guideword.Early: {"dt": 0.5},
    Guideword.Late: {"dt": 0.5},
    Guideword.Intermittent: {"period": 0.4, "duty": 0.5, "mode": None, "flicker_class": "vehicle"},
}

SUPPORTED_QUANTITIES: dict[Guideword, frozenset[str]] = {
    Guideword.NoOrNot: frozenset(QUANTITIES),
    Guideword.More: frozenset(SCALAR_QUANTITIES + ("target_present",)),
    Guideword.Less: frozenset(SCALAR_QUANTITIES + ("target_present",)),
    Guideword.AsWellAs: frozenset({"target_range", "target_present"}),
    Guideword.PartOf: frozenset(TARGET_QUANTITIES),
    Guideword.OtherThanInstead: frozenset({"target_class"}),
    Guideword.Reverse: frozenset(SCALAR_QUANTITIES),
    Guideword.Early: frozenset(QUANTITIES),
    Guideword.Late: frozenset(QUANTITIES),
    Guideword.Intermittent: frozenset(QUANTITIES),
}

DEFAULT_SPURIOUS_TARGET = Target("static", 30.0, 0.0)


def supports(guideword: Guideword, quantity: str) -> bool:
    return quantity in SUPPORTED_QUANTITIES[guideword]


def resolve_magnitude(guideword: Guideword, block: Optional[dict]) -> dict[str, Any]:
    block = dict(block or {})
    block.pop("window", None)
    defaults = MAGNITUDE_DEFAULTS[guideword]
    unknown = set(block) - set(defaults) - ({"spurious_target"} if guideword is Guideword.AsWellAs else set())
    if unknown:
        raise RejectedInput(f"{guideword.name}: unexpected magnitude field(s) {sorted(unknown)}")
    out = {**defaults, **block}
    for key in ("delta", "dt", "period", "duty"):
        if key in out and (isinstance(out[key], bool) or not isinstance(out[key], (int, float))):
            raise RejectedInput(f"{guideword.name}: {key} must be a number")
    if guideword in (Guideword.More, Guideword.Less) and not 0 <= out["delta"] <= 10:
        raise RejectedInput("delta must lie in [0, 10]")
    if guideword in (Guideword.More, Guideword.Less) and (not isinstance(out["k"], int) or out["k"] < 0):
        raise RejectedInput("k must be a non-negative integer")
    if guideword in (Guideword.Early, Guideword.Late) and not out["dt"] >= 0:
        raise RejectedInput("dt must be non-negative")
    if guideword is Guideword.Intermittent:
        if not out["period"] > 0 or not 0 <= out["duty"] <= 1:
            raise RejectedInput("intermittent needs period > 0 and duty in [0, 1]")
        if out["mode"] not in (None, "dropout", "flicker"):
            raise RejectedInput("intermittent mode must be dropout or flicker")
    if guideword is Guideword.PartOf and not all(isinstance(i, int) for i in out["drop"]):
        raise RejectedInput("drop must list target indices")
    return out


@dataclass(frozen=True)
class InjectionSpec:
    channel_id: str
    guideword: Guideword
    window: Optional[tuple[float, float]] = None  # None: whole run
    magnitude: dict = field(default_factory=dict, hash=False)
    spurious_target: Optional[Target] = None

    def resolved_window(self, scenario: Scenario) -> tuple[float, float]:
        return self.window if self.window is not None else (0.0, scenario.duration)

    def params(self) -> dict[str, Any]:
        return resolve_magnitude(self.guideword, self.magnitude)

    def validate(self, scenario: Scenario) -> None:
        ch = scenario.channel(self.channel_id)
        if ch is None:
            raise RejectedInput(f"injection references unknown channel {self.channel_id!r}")
        if not supports(self.guideword, ch.quantity):
            raise RejectedInput(f"{self.guideword.name} is not defined for {ch.quantity} channels")
        t0, t1 = self.resolved_window(scenario)
        if not 0 <= t0 <= t1 <= scenario.duration + 1e-9:
            raise RejectedInput(f"window [{t0}, {t1}] outside [0, {scenario.duration}]")
        self.params()
        if self.spurious_target is not None and self.guideword is not Guideword.AsWellAs:
            raise RejectedInput("spurious_target is only valid with AsWellAs")


# ---------------------------------------------------------------------------
# JSON


def _target_from(obj, pointer, path=None) -> Target:
    f = Fields(obj, pointer, path)
    lp = f.get("lateral_path")
    path_obj = None
    if lp is not None:
        lf = Fields(lp, pointer + "/lateral_path", path)
        path_obj = LateralPath(lf.num("y0"), lf.num("vy"), lf.num("t_start", 0.0))
    return Target(
        cls=f.str("class"),
        initial_gap=f.num("initial_gap"),
        v=f.num("v", 0.0),
        lateral_offset=f.num("lateral_offset", 0.0),
        lateral_path=path_obj,
        accel=f.num("accel", 0.0),
        accel_start=f.num("accel_start", 0.0),
    )


def target_to_dict(t: Target) -> dict:
    d = {"class": t.cls, "initial_gap": t.initial_gap, "v": t.v}
    if t.lateral_offset:
        d["lateral_offset"] = t.lateral_offset
    if t.lateral_path is not None:
        d["lateral_path"] = {"y0": t.lateral_path.y0, "vy": t.lateral_path.vy, "t_start": t.lateral_path.t_start}
    if t.accel:
        d["accel"] = t.accel
        d["accel_start"] = t.accel_start
    return d


def channel_from_dict(obj, pointer="/channel", path=None) -> SensorChannel:
    f = Fields(obj, pointer, path)
    rng = f.get("range_max")
    return SensorChannel(
        id=f.str("id"),
        source_modality=f.str("source_modality"),
        quantity=f.str("quantity"),
        latency=f.num("latency", 0.0),
        noise_sd=f.num("noise_sd", 0.0),
        range_max=None if rng is None else f.num("range_max"),
        fov_check=f.bool("fov_check", True),
    )


def channel_to_dict(c: SensorChannel) -> dict:
    d = {"id": c.id, "source_modality": c.source_modality, "quantity": c.quantity,
         "latency": c.latency, "noise_sd": c.noise_sd, "fov_check": c.fov_check}
    if c.range_max is not None:
        d["range_max"] = c.range_max
    return d


def scenario_from_dict(obj, path=None) -> Scenario:
    f = Fields(obj, "/scenario", path)
    ego = f.child("ego_init")
    set_speed = ego.get("set_speed")
    seed = f.int("seed", 0)
    road = []
    for i, s in enumerate(f.list("road")):
        sf = Fields(s, f.at("road", i), path)
        road.append(Segment(sf.num("length"), sf.num("curvature", 0.0), sf.num("lane_width", 3.5)))
    channels = f.get("channels")
    return Scenario(
        usecase_id=f.str("usecase_id"),
        duration=f.num("duration"),
        dt=f.num("dt", 0.01),
        road=tuple(road),
        ego_init=EgoInit(ego.num("v"), ego.num("lateral_offset", 0.0),
                         None if set_speed is None else ego.num("set_speed")),
        targets=tuple(_target_from(t, f.at("targets", i), path) for i, t in enumerate(f.list("targets", []))),
        seed=seed,
        channels=STANDARD_CHANNELS if channels is None else tuple(
            channel_from_dict(c, f.at("channels", i), path) for i, c in enumerate(f.list("channels"))
        ),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    ego = {"v": sc.ego_init.v, "lateral_offset": sc.ego_init.lateral_offset}
    if sc.ego_init.set_speed is not None:
        ego["set_speed"] = sc.ego_init.set_speed
    return {
        "usecase_id": sc.usecase_id, "duration": sc.duration, "dt": sc.dt, "seed": sc.seed,
        "road": [{"length": s.length, "curvature": s.curvature, "lane_width": s.lane_width} for s in sc.road],
        "ego_init": ego,
        "targets": [target_to_dict(t) for t in sc.targets],
        "channels": [channel_to_dict(c) for c in sc.channels],
    }


def injection_from_dict(obj, pointer="/injection", path=None) -> InjectionSpec:
    f = Fields(obj, pointer, path)
    try:
        gw = Guideword.parse(f.str("guideword"))
    except ValueError as exc:
        raise DocumentError(str(exc), path=path, pointer=pointer + "/guideword") from None
    window = f.get("window")
    if window is not None:
        if (not isinstance(window, list) or len(window) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in window)):
            raise DocumentError("expected [t_start, t_end]", path=path, pointer=pointer + "/window")
        window = (float(window[0]), float(window[1]))
    spurious = f.get("spurious_target")
    return InjectionSpec(
        channel_id=f.str("channel_id"),
        guideword=gw,
        window=window,
        magnitude=f.dict("magnitude", {}),
        spurious_target=None if spurious is None else _target_from(spurious, pointer + "/spurious_target", path),
    )


def injection_to_dict(inj: InjectionSpec) -> dict:
    d = {"channel_id": inj.channel_id, "guideword": inj.guideword.name, "magnitude": dict(inj.magnitude)}
    if inj.window is not None:
        d["window"] = list(inj.window)
    if inj.spurious_target is not None:
        d["spurious_target"] = target_to_dict(inj.spurious_target)
    return d


def load_scenario(path) -> Scenario:
    _, payload = load_document(path, expected="scenario")
    return scenario_from_dict(payload, path=path)


def load_injections(path) -> list[InjectionSpec]:
    _, payload = load_document(path, expected="injections")
    if not isinstance(payload, list):
        raise DocumentError("expected a list of injections", path=path, pointer="/injections")
    return [injection_from_dict(x, f"/injections/{i}", path) for i, x in enumerate(payload)]
