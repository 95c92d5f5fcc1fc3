"""Object tracker: least-squares velocity over a sliding history window."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .scenario import TrackerConfig

PREDICTION_HORIZON = 3.0
PREDICTION_STEP = 0.1
# object classes the predictor treats as not moving
STATIONARY_CLASSES = frozenset({"static"})


@dataclass(frozen=True)
class TrackState:
    id: str
    t: float
    position: tuple[float, float]                 # (gap, lateral) relative to ego
    velocity: Optional[tuple[float, float]]       # relative (vx, vy); None until 2 samples
    cls: Optional[str]
    n_samples: int

    @property
    def predicted_velocity(self) -> tuple[float, float]:
        if self.velocity is None:
            return (0.0, 0.0)
        if self.cls in STATIONARY_CLASSES:
            return (self.velocity[0], 0.0)
        return self.velocity

    def predict(self, tau: float) -> tuple[float, float]:
        vx, vy = self.predicted_velocity
        return (self.position[0] + vx * tau, self.position[1] + vy * tau)

    @property
    def predicted_path(self) -> list[tuple[float, float, float]]:
        n = int(round(PREDICTION_HORIZON / PREDICTION_STEP))
        return [(k * PREDICTION_STEP, *self.predict(k * PREDICTION_STEP)) for k in range(n + 1)]


class _Track:
    __slots__ = ("samples", "cls", "t_ref", "n", "st", "stt", "sx", "sy", "stx", "sty", "last_t")

    def __init__(self, t_ref):
        self.samples = deque()
        self.cls = None
        self.t_ref = t_ref
        self.reset()

    def reset(self):
        self.samples.clear()
        self.n = 0
        self.st = self.stt = self.sx = self.sy = self.stx = self.sty = 0.0

    def _acc(self, t, x, y, sign):
        self.n += sign
        self.st += sign * t
        self.stt += sign * t * t
        self.sx += sign * x
        self.sy += sign * y
        self.stx += sign * t * x
        self.sty += sign * t * y

    def add(self, t, x, y, horizon):
        tr = t - self.t_ref
        self.samples.append((tr, x, y))
        self._acc(tr, x, y, 1)
        while self.samples and tr - self.samples[0][0] > horizon + 1e-9:
            self._acc(*self.samples.popleft(), -1)
        self.last_t = t

    def velocity(self):
        if self.n < 2:
            return None
        den = self.n * self.stt - self.st * self.st
        if den <= 1e-12:
            return None
        return ((self.n * self.stx - self.st * self.sx) / den,
                (self.n * self.sty - self.st * self.sy) / den)


class Tracker:
    def __init__(self, config: TrackerConfig = TrackerConfig()):
        self.config = config
        self._tracks: dict[str, _Track] = {}

    def update(self, t: float, positions: dict, classes: dict) -> dict[str, TrackState]:
        """Feed one frame; ``positions`` maps object id to (gap, lateral)."""
        horizon = self.config.history_horizon
        out = {}
        for oid, (x, y) in positions.items():
            tr = self._tracks.get(oid)
            if tr is None:
                tr = self._tracks[oid] = _Track(t)
            cls = classes.get(oid)
            if cls is not None:
                if self.config.discard_history_on_reclass and tr.cls is not None and cls != tr.cls:
                    tr.reset()
                tr.cls = cls
            tr.add(t, x, y, horizon)
            out[oid] = TrackState(oid, t, (x, y), tr.velocity(), tr.cls, tr.n)
        for oid in [k for k, tr in self._tracks.items() if t - tr.last_t > horizon]:
            del self._tracks[oid]
        return out


def track(measurements: Iterable, tracker_config: TrackerConfig = TrackerConfig()) -> Optional[TrackState]:
    """Track a single object through time-ordered ``(t, gap, lateral, cls)`` samples."""
    tracker = Tracker(tracker_config)
    state = None
    for t, x, y, cls in measurements:
        state = tracker.update(t, {"obj": (x, y)}, {"obj": cls} if cls is not None else {}).get("obj", state)
    return state
