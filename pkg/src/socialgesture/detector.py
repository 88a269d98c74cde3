"""Streaming gesture detection: hysteresis triggers, refractory periods and HUG composition.

A gesture event opens once its confidence stays at or above the trigger
threshold for ``min_hold`` consecutive windows, closes when the confidence
drops below the release threshold, and is emitted at close. The gesture is
then refractory for ``refractory`` frames; windows inside that period are
ignored and do not count toward the next ``min_hold`` run.

An LS event and an RS event whose peaks lie within ``hug_window`` frames of
each other are replaced by one HUG event.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .classifier import ModelBundle
from .features import (
    WindowConfig,
    clip_window_features,
    frame_features_array,
    shoulder_width,
    window_features_from_arrays,
)
from .skeleton import ATOMIC_GESTURES, Clip, GestureLabel, JointId, SkeletonFrame, validate_frame

N_ATOMIC = len(ATOMIC_GESTURES)
_MAT = (GestureLabel.RM, GestureLabel.LM)


class InvalidFrameError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    trigger_threshold: float = 0.5
    release_threshold: float = 0.4
    min_hold: int = 5
    refractory: int = 30
    hug_window: int = 10
    window: WindowConfig = field(default_factory=WindowConfig)
    # drop RM/LM events that overlap another gesture's event
    suppress_mat_while_active: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.release_threshold < self.trigger_threshold <= 1:
            raise ValueError("need 0 <= release_threshold < trigger_threshold <= 1")
        if self.min_hold < 1:
            raise ValueError("min_hold must be >= 1")
        if self.refractory < 0:
            raise ValueError("refractory must be >= 0")
        if self.hug_window < 0:
            raise ValueError("hug_window must be >= 0")


@dataclass(frozen=True)
class DetectionEvent:
    gesture: GestureLabel
    peak_confidence: float
    start_frame: int
    peak_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if not self.start_frame <= self.peak_frame <= self.end_frame:
            raise ValueError("event needs start <= peak <= end")

    def format(self) -> str:
        return (
            f"{self.gesture.name},{self.start_frame},{self.peak_frame},"
            f"{self.end_frame},{self.peak_confidence:.6f}"
        )


class Phase(enum.Enum):
    IDLE = "idle"
    ARMING = "arming"
    ACTIVE = "active"
    REFRACTORY = "refractory"


class GestureTrigger:
    """Hysteresis state machine for one gesture's confidence stream."""

    def __init__(self, gesture: GestureLabel, config: DetectorConfig) -> None:
        self.gesture = gesture
        self.config = config
        self.phase = Phase.IDLE
        self.run = 0
        self.start = -1
        self.peak = -1.0
        self.peak_frame = -1
        self.refractory_until = -1

    @property
    def busy(self) -> bool:
        """True while a run is under way whose event may still be emitted."""
        return self.phase in (Phase.ARMING, Phase.ACTIVE)

    def update(self, frame: int, conf: float) -> DetectionEvent | None:
        cfg = self.config
        if self.phase is Phase.REFRACTORY:
            if frame <= self.refractory_until:
                return None
            self.phase = Phase.IDLE
        if self.phase is Phase.ACTIVE:
            if conf < cfg.release_threshold:
                event = DetectionEvent(self.gesture, self.peak, self.start, self.peak_frame, frame - 1)
                self.phase = Phase.REFRACTORY
                self.refractory_until = frame + cfg.refractory
                return event
            if conf > self.peak:
                self.peak, self.peak_frame = conf, frame
            return None
        if conf >= cfg.trigger_threshold:
            if self.phase is Phase.IDLE:
                self.phase = Phase.ARMING
                self.run = 0
                self.start = frame
                self.peak, self.peak_frame = conf, frame
            elif conf > self.peak:
                self.peak, self.peak_frame = conf, frame
            self.run += 1
            if self.run >= cfg.min_hold:
                self.phase = Phase.ACTIVE
        else:
            self.phase = Phase.IDLE
        return None

    def flush(self, last_frame: int) -> DetectionEvent | None:
        """Close an event still open at end of stream."""
        event = None
        if self.phase is Phase.ACTIVE:
            event = DetectionEvent(self.gesture, self.peak, self.start, self.peak_frame, last_frame)
        self.phase = Phase.IDLE
        return event


def _hug(a: DetectionEvent, b: DetectionEvent) -> DetectionEvent:
    return DetectionEvent(
        GestureLabel.HUG,
        min(a.peak_confidence, b.peak_confidence),
        min(a.start_frame, b.start_frame),
        max(a.peak_frame, b.peak_frame),
        max(a.end_frame, b.end_frame),
    )


_PARTNER = {GestureLabel.LS: GestureLabel.RS, GestureLabel.RS: GestureLabel.LS}


def compose_events(events: Sequence[DetectionEvent], config: DetectorConfig | None = None) -> list[DetectionEvent]:
    """Replace LS/RS pairs with peaks within ``hug_window`` by HUG events.

    ``events`` are atomic events in emission order. Each LS/RS event pairs
    with the earliest-emitted unconsumed partner in range; paired
    constituents are dropped. Output is sorted by (start, peak, gesture).
    """
    config = config or DetectorConfig()
    out: list[DetectionEvent] = []
    open_: list[DetectionEvent] = []
    for e in events:
        partner = _PARTNER.get(e.gesture)
        if partner is None:
            out.append(e)
            continue
        match = next(
            (o for o in open_ if o.gesture is partner and abs(o.peak_frame - e.peak_frame) <= config.hug_window),
            None,
        )
        if match is None:
            open_.append(e)
        else:
            open_.remove(match)
            out.append(_hug(match, e))
    out.extend(open_)
    return sort_events(out)


def sort_events(events: Iterable[DetectionEvent]) -> list[DetectionEvent]:
    return sorted(events, key=lambda e: (e.start_frame, e.peak_frame, int(e.gesture)))


@dataclass
class StepResult:
    frame: int
    confidences: np.ndarray  # (8,), gesture code order
    events: list[DetectionEvent]


class Detector:
    """Frame-by-frame detector for one skeleton stream.

    LS and RS events are held back until they can no longer pair into a
    HUG, so the emitted stream matches :func:`compose_events` applied to the
    whole run.
    """

    def __init__(self, bundle: ModelBundle, config: DetectorConfig | None = None, fps: float = 30.0) -> None:
        self.bundle = bundle
        self.config = config or DetectorConfig()
        self.fps = fps
        W = self.config.window.window
        self._per_frame: deque[np.ndarray] = deque(maxlen=W)
        self._hands: deque[np.ndarray] = deque(maxlen=W)
        self._B: deque[float] = deque(maxlen=W)
        self.triggers = [GestureTrigger(g, self.config) for g in ATOMIC_GESTURES]
        self._pending: list[DetectionEvent] = []
        self.frame_index = -1

    @property
    def buffered(self) -> int:
        return len(self._per_frame)

    def _confidences(self) -> np.ndarray:
        W = self.config.window.window
        X = window_features_from_arrays(
            np.stack(self._per_frame), np.stack(self._hands), np.array(self._B), W, self.fps
        )
        return self.bundle.confidences(X)[0]

    def step(self, frame: SkeletonFrame) -> StepResult:
        report = validate_frame(frame)
        if not report.ok:
            raise InvalidFrameError("; ".join(report.violations))
        self.frame_index += 1
        i = self.frame_index
        joints = frame.joints[None]
        states = np.array([[int(frame.hand_state_left), int(frame.hand_state_right)]])
        self._per_frame.append(frame_features_array(joints, states)[0])
        self._hands.append(joints[0, [JointId.HandLeft, JointId.HandRight]])
        self._B.append(float(shoulder_width(joints)[0]))
        W = self.config.window.window
        if len(self._per_frame) < W:
            return StepResult(i, np.zeros(N_ATOMIC), [])
        if (i - (W - 1)) % self.config.window.stride:
            return StepResult(i, np.zeros(N_ATOMIC), [])
        conf = self._confidences()
        closed = [e for trig, c in zip(self.triggers, conf) if (e := trig.update(i, float(c))) is not None]
        return StepResult(i, conf, self._compose_stream(closed, i))

    def finish(self) -> list[DetectionEvent]:
        """Close open events and release everything pending."""
        closed = [e for trig in self.triggers if (e := trig.flush(self.frame_index)) is not None]
        out = self._compose_stream(closed, self.frame_index)
        out.extend(self._pending)
        self._pending = []
        return sort_events(out)

    def _compose_stream(self, closed: list[DetectionEvent], frame: int) -> list[DetectionEvent]:
        out: list[DetectionEvent] = []
        hw = self.config.hug_window
        for e in closed:
            partner = _PARTNER.get(e.gesture)
            if partner is None:
                out.append(e)
                continue
            match = next(
                (o for o in self._pending if o.gesture is partner and abs(o.peak_frame - e.peak_frame) <= hw),
                None,
            )
            if match is None:
                self._pending.append(e)
            else:
                self._pending.remove(match)
                out.append(_hug(match, e))
        # release events no future partner can reach: any later partner peaks after `frame`
        still: list[DetectionEvent] = []
        for e in self._pending:
            partner_trigger = self.triggers[int(_PARTNER[e.gesture])]
            if frame >= e.peak_frame + hw and not partner_trigger.busy:
                out.append(e)
            else:
                still.append(e)
        self._pending = still
        return out


@dataclass
class DetectionResult:
    end_frames: np.ndarray  # window end frames
    confidences: np.ndarray  # (M, 8)
    events: list[DetectionEvent]


def detect_clip(clip: Clip, bundle: ModelBundle, config: DetectorConfig | None = None) -> DetectionResult:
    """Batch detection over a whole clip; equivalent to streaming it through :class:`Detector`."""
    config = config or DetectorConfig()
    ends, X = clip_window_features(clip, config.window)
    conf = bundle.confidences(X) if len(ends) else np.empty((0, N_ATOMIC))
    triggers = [GestureTrigger(g, config) for g in ATOMIC_GESTURES]
    emitted: list[DetectionEvent] = []
    for i, row in zip(ends.tolist(), conf.tolist()):
        for trig, c in zip(triggers, row):
            e = trig.update(i, c)
            if e is not None:
                emitted.append(e)
    last = len(clip) - 1
    emitted.extend(e for trig in triggers if (e := trig.flush(last)) is not None)
    return DetectionResult(ends, conf, compose_events(emitted, config))


def _suppress_mat(events: list[DetectionEvent]) -> list[DetectionEvent]:
    others = [e for e in events if e.gesture not in _MAT]
    return [
        e
        for e in events
        if e.gesture not in _MAT
        or not any(o.start_frame <= e.end_frame and e.start_frame <= o.end_frame for o in others)
    ]


def decide(events: Sequence[DetectionEvent], config: DetectorConfig | None = None) -> GestureLabel:
    """Label of the highest-peak event (ties: earlier peak, then lower code); NONE if no event."""
    config = config or DetectorConfig()
    events = list(events)
    if config.suppress_mat_while_active:
        events = _suppress_mat(events)
    if not events:
        return GestureLabel.NONE
    best = min(events, key=lambda e: (-e.peak_confidence, e.peak_frame, int(e.gesture)))
    return best.gesture


def classify_prompted_clip(clip: Clip, bundle: ModelBundle, config: DetectorConfig | None = None) -> GestureLabel:
    """The gesture a prompted enactment is recognized as, or NONE."""
    config = config or DetectorConfig()
    return decide(detect_clip(clip, bundle, config).events, config)


def stream_clip(clip: Clip, bundle: ModelBundle, config: DetectorConfig | None = None) -> list[DetectionEvent]:
    """Feed a clip frame by frame through a :class:`Detector`."""
    det = Detector(bundle, config, clip.fps)
    events: list[DetectionEvent] = []
    for i in range(len(clip)):
        events.extend(det.step(clip.frame(i)).events)
    events.extend(det.finish())
    return sort_events(events)


def confidence_events(
    series: np.ndarray, config: DetectorConfig | None = None, gestures: Sequence[GestureLabel] = ATOMIC_GESTURES
) -> list[DetectionEvent]:
    """Run the trigger logic over a precomputed confidence series.

    ``series`` has one row per frame and one column per entry of ``gestures``;
    a 1-D series is taken as a single gesture's stream.
    """
    config = config or DetectorConfig()
    series = np.asarray(series, dtype=np.float64)
    if series.ndim == 1:
        series = series[:, None]
    if series.shape[1] != len(gestures):
        raise ValueError("series columns must match gestures")
    triggers = [GestureTrigger(g, config) for g in gestures]
    emitted = []
    for i, row in enumerate(series.tolist()):
        for trig, c in zip(triggers, row):
            e = trig.update(i, c)
            if e is not None:
                emitted.append(e)
    emitted.extend(e for trig in triggers if (e := trig.flush(series.shape[0] - 1)) is not None)
    return compose_events(emitted, config)
