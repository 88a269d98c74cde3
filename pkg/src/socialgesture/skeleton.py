"""Skeleton data model, the skel-jsonl clip format and the synthetic enactment generator.

Positions are meters in sensor space: x lateral (positive toward the user's
right), y up, z depth increasing away from the sensor.

The generator stands in for the sensor and for the human volunteers. It is
built on numpy's ``PCG64`` bit generator, whose output stream for a given
integer seed is fixed and platform independent. Every clip is a pure function
of ``(gesture, params, seed)``; per-participant traits come from
``params.participant_seed``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "JointId",
    "HandState",
    "GestureLabel",
    "ATOMIC_GESTURES",
    "SIX_GESTURES",
    "SkeletonFrame",
    "LabelSpan",
    "Clip",
    "SynthParams",
    "ValidationReport",
    "ClipFormatError",
    "validate_frame",
    "parse_clip",
    "serialize_clip",
    "synth_clip",
    "synth_hug_clip",
    "mirror_clip",
    "rest_pose",
    "synth_cohort",
    "derive_seed",
]

N_JOINTS = 25
FORMAT_VERSION = 1
DEFAULT_FPS = 30.0


class JointId(enum.IntEnum):
    SpineBase = 0
    SpineMid = 1
    SpineShoulder = 2
    Neck = 3
    Head = 4
    ShoulderLeft = 5
    ElbowLeft = 6
    WristLeft = 7
    HandLeft = 8
    HandTipLeft = 9
    ThumbLeft = 10
    ShoulderRight = 11
    ElbowRight = 12
    WristRight = 13
    HandRight = 14
    HandTipRight = 15
    ThumbRight = 16
    HipLeft = 17
    KneeLeft = 18
    AnkleLeft = 19
    FootLeft = 20
    HipRight = 21
    KneeRight = 22
    AnkleRight = 23
    FootRight = 24


class HandState(enum.IntEnum):
    Neutral = 0
    OnTable = 1
    PalmOut = 2
    CurvedTowardCamera = 3
    ReachingSide = 4


class GestureLabel(enum.IntEnum):
    """Gesture vocabulary. Integer values are the canonical ordering codes."""

    R5 = 0
    L5 = 1
    RH = 2
    LH = 3
    RS = 4
    LS = 5
    RM = 6
    LM = 7
    HUG = 8
    HOLD_HANDS = 9
    NONE = 10

    @property
    def is_atomic(self) -> bool:
        return self.value <= GestureLabel.LM.value

    @property
    def is_right(self) -> bool:
        return self.is_atomic and self.value % 2 == 0

    def mirrored(self) -> GestureLabel:
        if not self.is_atomic:
            return self
        return GestureLabel(self.value ^ 1)

    @classmethod
    def parse(cls, text: str) -> GestureLabel:
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown gesture label {text!r}") from None


ATOMIC_GESTURES: tuple[GestureLabel, ...] = tuple(g for g in GestureLabel if g.is_atomic)
SIX_GESTURES: tuple[GestureLabel, ...] = ATOMIC_GESTURES[:6]

GESTURE_HAND_STATE = {
    GestureLabel.R5: HandState.PalmOut,
    GestureLabel.RH: HandState.CurvedTowardCamera,
    GestureLabel.RS: HandState.ReachingSide,
    GestureLabel.RM: HandState.OnTable,
}

# left/right joint pairs, used for mirroring
_MIRROR_PAIRS = [
    (JointId.ShoulderLeft, JointId.ShoulderRight),
    (JointId.ElbowLeft, JointId.ElbowRight),
    (JointId.WristLeft, JointId.WristRight),
    (JointId.HandLeft, JointId.HandRight),
    (JointId.HandTipLeft, JointId.HandTipRight),
    (JointId.ThumbLeft, JointId.ThumbRight),
    (JointId.HipLeft, JointId.HipRight),
    (JointId.KneeLeft, JointId.KneeRight),
    (JointId.AnkleLeft, JointId.AnkleRight),
    (JointId.FootLeft, JointId.FootRight),
]
MIRROR_PERMUTATION = np.arange(N_JOINTS)
for _a, _b in _MIRROR_PAIRS:
    MIRROR_PERMUTATION[_a], MIRROR_PERMUTATION[_b] = _b, _a


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One timestamped sample: 25 joint positions and both hand states.

    Construction does not validate; use :func:`validate_frame`.
    """

    t: float
    joints: np.ndarray
    hand_state_left: HandState = HandState.Neutral
    hand_state_right: HandState = HandState.Neutral

    def __post_init__(self) -> None:
        joints = np.array(self.joints, dtype=np.float64)
        joints.setflags(write=False)
        object.__setattr__(self, "joints", joints)

    def joint(self, jid: JointId) -> np.ndarray:
        return self.joints[int(jid)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return (
            self.t == other.t
            and self.joints.shape == other.joints.shape
            and bool(np.array_equal(self.joints, other.joints))
            and int(self.hand_state_left) == int(other.hand_state_left)
            and int(self.hand_state_right) == int(other.hand_state_right)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_frame(frame: SkeletonFrame) -> ValidationReport:
    """Check a frame against the data-model invariants; never raises."""
    problems: list[str] = []
    t = frame.t
    if not isinstance(t, (int, float)) or not math.isfinite(t):
        problems.append("non-finite timestamp")
    elif t < 0:
        problems.append("negative timestamp")
    joints = frame.joints
    if joints.ndim != 2 or joints.shape[1:] != (3,):
        problems.append(f"joints must be an array of (x, y, z) triples, got shape {joints.shape}")
    else:
        if joints.shape[0] != N_JOINTS:
            problems.append(f"expected {N_JOINTS} joints, got {joints.shape[0]}")
        bad = ~np.isfinite(joints)
        for j, axis in zip(*np.nonzero(bad)):
            name = JointId(j).name if j < N_JOINTS else str(j)
            problems.append(f"joint {j} ({name}): non-finite {'xyz'[axis]}")
    for side, state in (("left", frame.hand_state_left), ("right", frame.hand_state_right)):
        if int(state) not in HandState._value2member_map_:
            problems.append(f"{side} hand state {state!r} out of range 0-4")
    return ValidationReport(tuple(problems))


@dataclass(frozen=True)
class LabelSpan:
    gesture: GestureLabel
    start_frame: int
    end_frame: int

    def contains(self, first: int, last: int) -> bool:
        return self.start_frame <= first and last <= self.end_frame


class Clip:
    """A fixed-rate frame sequence with optional label spans.

    Frames are held as arrays: ``positions`` (N, 25, 3) and ``hand_states``
    (N, 2) as (left, right). Timestamps are implied by ``i / fps``.
    """

    def __init__(
        self,
        positions: np.ndarray,
        hand_states: np.ndarray,
        fps: float = DEFAULT_FPS,
        spans: Iterable[LabelSpan] = (),
        meta: Mapping[str, str] | None = None,
    ) -> None:
        positions = np.array(positions, dtype=np.float64)
        hand_states = np.array(hand_states, dtype=np.int64).reshape(-1, 2)
        if positions.ndim != 3 or positions.shape[1:] != (N_JOINTS, 3):
            raise ValueError(f"positions must have shape (N, {N_JOINTS}, 3), got {positions.shape}")
        if hand_states.shape[0] != positions.shape[0]:
            raise ValueError("hand_states length does not match frame count")
        if not (math.isfinite(fps) and fps > 0):
            raise ValueError(f"fps must be positive, got {fps}")
        if not np.all(np.isfinite(positions)):
            raise ValueError("non-finite joint coordinate")
        if hand_states.size and (hand_states.min() < 0 or hand_states.max() > 4):
            raise ValueError("hand state code out of range 0-4")
        n = positions.shape[0]
        spans = tuple(spans)
        for s in spans:
            if not s.gesture.is_atomic:
                raise ValueError(f"span gesture {s.gesture.name} is not atomic")
            if not 0 <= s.start_frame <= s.end_frame < n:
                raise ValueError(f"span {s.gesture.name} [{s.start_frame}, {s.end_frame}] outside clip of {n} frames")
        by_gesture: dict[GestureLabel, list[LabelSpan]] = {}
        for s in spans:
            by_gesture.setdefault(s.gesture, []).append(s)
        for g, group in by_gesture.items():
            group.sort(key=lambda s: s.start_frame)
            for a, b in zip(group, group[1:]):
                if b.start_frame <= a.end_frame:
                    raise ValueError(f"overlapping {g.name} spans")
        positions.setflags(write=False)
        hand_states.setflags(write=False)
        self.positions = positions
        self.hand_states = hand_states
        self.fps = float(fps)
        self.spans = spans
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.fps

    def frame(self, i: int) -> SkeletonFrame:
        return SkeletonFrame(
            t=i / self.fps,
            joints=self.positions[i],
            hand_state_left=HandState(int(self.hand_states[i, 0])),
            hand_state_right=HandState(int(self.hand_states[i, 1])),
        )

    @property
    def frames(self) -> list[SkeletonFrame]:
        return [self.frame(i) for i in range(len(self))]

    @classmethod
    def from_frames(
        cls,
        frames: Sequence[SkeletonFrame],
        fps: float = DEFAULT_FPS,
        spans: Iterable[LabelSpan] = (),
        meta: Mapping[str, str] | None = None,
    ) -> Clip:
        for i, fr in enumerate(frames):
            report = validate_frame(fr)
            if not report.ok:
                raise ValueError(f"frame {i}: {'; '.join(report.violations)}")
            if abs(fr.t - i / fps) > 1e-9:
                raise ValueError(f"frame {i}: timestamp {fr.t} != {i}/{fps}")
        positions = np.array([fr.joints for fr in frames]).reshape(-1, N_JOINTS, 3)
        states = np.array([[int(fr.hand_state_left), int(fr.hand_state_right)] for fr in frames]).reshape(-1, 2)
        return cls(positions, states, fps, spans, meta)

    @property
    def gestures(self) -> tuple[GestureLabel, ...]:
        return tuple(sorted({s.gesture for s in self.spans}))

    def with_meta(self, **meta: str) -> Clip:
        return Clip(self.positions, self.hand_states, self.fps, self.spans, {**self.meta, **meta})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clip):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.spans == other.spans
            and self.meta == other.meta
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.hand_states, other.hand_states)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        spans = ", ".join(f"{s.gesture.name}[{s.start_frame}:{s.end_frame}]" for s in self.spans)
        return f"Clip({len(self)} frames @ {self.fps:g} fps, spans=[{spans}])"


# ---------------------------------------------------------------------------
# skel-jsonl v1
# ---------------------------------------------------------------------------


class ClipFormatError(ValueError):
    """Raised for malformed clip files. ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line else message)


def _num(x: float) -> float:
    # canonical numbers: at most 6 decimals, shortest repr; -0.0 kept as is
    return round(float(x), 6)


def serialize_clip(clip: Clip) -> bytes:
    """Canonical skel-jsonl encoding: header line, then one line per frame."""
    header = {
        "v": FORMAT_VERSION,
        "fps": float(clip.fps),
        "meta": {str(k): str(v) for k, v in clip.meta.items()},
        "spans": [{"g": s.gesture.name, "a": s.start_frame, "b": s.end_frame} for s in clip.spans],
    }
    lines = [json.dumps(header, separators=(",", ":"), ensure_ascii=False)]
    rounded = np.round(clip.positions, 6)
    for i in range(len(clip)):
        joints = ",".join(
            "[" + ",".join(repr(float(v)) for v in row) + "]" for row in rounded[i]
        )
        hl, hr = (int(v) for v in clip.hand_states[i])
        lines.append(f'{{"t":{_num(i / clip.fps)!r},"j":[{joints}],"hl":{hl},"hr":{hr}}}')
    return ("\n".join(lines) + "\n").encode("utf-8")


def _finite_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def parse_clip(data: bytes | str) -> Clip:
    """Parse a skel-jsonl clip. Field order is free; errors carry line numbers."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ClipFormatError(0, f"not UTF-8: {exc}") from None
    else:
        text = data
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ClipFormatError(1, "missing header line")

    def load(lineno: int, raw: str) -> dict:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ClipFormatError(lineno, f"malformed JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ClipFormatError(lineno, "expected a JSON object")
        return obj

    header = load(1, lines[0])
    if header.get("v") != FORMAT_VERSION:
        raise ClipFormatError(1, f"unsupported version {header.get('v')!r}")
    fps = header.get("fps", DEFAULT_FPS)
    if not _finite_number(fps) or fps <= 0:
        raise ClipFormatError(1, f"invalid fps {fps!r}")
    meta = header.get("meta", {})
    if not isinstance(meta, dict):
        raise ClipFormatError(1, "meta must be an object")
    raw_spans = header.get("spans", [])
    if not isinstance(raw_spans, list):
        raise ClipFormatError(1, "spans must be a list")
    spans = []
    for s in raw_spans:
        if not isinstance(s, dict) or not {"g", "a", "b"} <= s.keys():
            raise ClipFormatError(1, f"malformed span {s!r}")
        try:
            g = GestureLabel[str(s["g"])]
        except KeyError:
            raise ClipFormatError(1, f"unknown gesture label {s['g']!r} in span") from None
        if not g.is_atomic:
            raise ClipFormatError(1, f"span label {g.name} is not an atomic gesture")
        if not all(isinstance(s[k], int) and not isinstance(s[k], bool) for k in ("a", "b")):
            raise ClipFormatError(1, f"span bounds must be integers: {s!r}")
        spans.append(LabelSpan(g, s["a"], s["b"]))

    n = len(lines) - 1
    positions = np.empty((n, N_JOINTS, 3))
    states = np.empty((n, 2), dtype=np.int64)
    prev_t = -math.inf
    for i, raw in enumerate(lines[1:]):
        lineno = i + 2
        obj = load(lineno, raw)
        missing = {"t", "j", "hl", "hr"} - obj.keys()
        if missing:
            raise ClipFormatError(lineno, f"missing field(s) {sorted(missing)}")
        t = obj["t"]
        if not _finite_number(t):
            raise ClipFormatError(lineno, f"non-finite or non-numeric timestamp {t!r}")
        if t < 0:
            raise ClipFormatError(lineno, "negative timestamp")
        if t <= prev_t:
            raise ClipFormatError(lineno, f"non-monotone timestamp {t} after {prev_t}")
        if abs(t - i / fps) > 1e-6:
            raise ClipFormatError(lineno, f"timestamp {t} does not match frame {i} at {fps:g} fps")
        prev_t = t
        joints = obj["j"]
        if not isinstance(joints, list):
            raise ClipFormatError(lineno, "joints must be a list")
        if len(joints) != N_JOINTS:
            raise ClipFormatError(lineno, f"expected {N_JOINTS} joints, got {len(joints)}")
        for k, p in enumerate(joints):
            if not isinstance(p, list) or len(p) != 3:
                raise ClipFormatError(lineno, f"joint {k} is not an (x, y, z) triple")
            for axis, v in enumerate(p):
                if not _finite_number(v):
                    raise ClipFormatError(lineno, f"joint {k}: non-finite {'xyz'[axis]} coordinate {v!r}")
            positions[i, k] = p
        for j, key in enumerate(("hl", "hr")):
            v = obj[key]
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= 4:
                raise ClipFormatError(lineno, f"hand state {key}={v!r} out of range 0-4")
            states[i, j] = v
    try:
        return Clip(positions, states, fps, spans, {str(k): str(v) for k, v in meta.items()})
    except ValueError as exc:
        raise ClipFormatError(1, str(exc)) from None


# ---------------------------------------------------------------------------
# synthetic enactments
# ---------------------------------------------------------------------------

BODY_ORIGIN = np.array([0.0, 0.0, 2.0])  # SpineMid in sensor space

_REST_BODY = {
    JointId.SpineBase: (0.0, -0.30, 0.0),
    JointId.SpineMid: (0.0, 0.0, 0.0),
    JointId.SpineShoulder: (0.0, 0.25, 0.0),
    JointId.Neck: (0.0, 0.33, 0.0),
    JointId.Head: (0.0, 0.45, 0.0),
    JointId.ShoulderLeft: (-0.18, 0.25, 0.0),
    JointId.ShoulderRight: (0.18, 0.25, 0.0),
    JointId.HipLeft: (-0.09, -0.30, 0.0),
    JointId.HipRight: (0.09, -0.30, 0.0),
    JointId.KneeLeft: (-0.09, -0.75, 0.0),
    JointId.KneeRight: (0.09, -0.75, 0.0),
    JointId.AnkleLeft: (-0.09, -1.15, 0.0),
    JointId.AnkleRight: (0.09, -1.15, 0.0),
    JointId.FootLeft: (-0.09, -1.20, -0.08),
    JointId.FootRight: (0.09, -1.20, -0.08),
}
REST_HAND_RIGHT = np.array([0.22, -0.20, -0.05])
REST_HAND_LEFT = REST_HAND_RIGHT * np.array([-1.0, 1.0, 1.0])

# right-side apex targets, body frame (SpineMid at origin)
APEX_RIGHT = {
    GestureLabel.R5: np.array([0.25, 0.50, -0.35]),
    GestureLabel.RH: np.array([0.15, 0.10, -0.45]),
    GestureLabel.RS: np.array([-0.22, 0.28, -0.08]),
    GestureLabel.RM: np.array([0.25, -0.50, -0.25]),
}

# nominal phase boundaries for a 7 s enactment: rise start, hold start, return start, rest start
PHASES = (1.5, 2.5, 4.5, 5.5)
NOMINAL_DURATION = 7.0

ELBOW_OFFSET = 0.05
HAND_TIP_LENGTH = 0.08
THUMB_LENGTH = 0.04
IDLE_SWAY_MAX = 0.03
IDLE_FREQ_RANGE = (0.1, 0.4)


@dataclass(frozen=True)
class SynthParams:
    noise_sigma: float = 0.01
    amplitude_scale_range: tuple[float, float] = (0.9, 1.1)
    timing_jitter: float = 0.15
    participant_seed: int = 0
    fps: float = DEFAULT_FPS
    duration: float = NOMINAL_DURATION

    def __post_init__(self) -> None:
        lo, hi = self.amplitude_scale_range
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0 < lo <= hi:
            raise ValueError("amplitude_scale_range must be positive and ordered")
        if not self.timing_jitter >= 0:
            raise ValueError("timing_jitter must be >= 0")
        if not self.fps > 0 or not self.duration > 0:
            raise ValueError("fps and duration must be positive")
        if not 0 <= self.participant_seed < 2**64:
            raise ValueError("participant_seed must be a 64-bit unsigned integer")


def rest_pose() -> np.ndarray:
    """The (25, 3) rest pose in sensor space, arms included."""
    body = np.zeros((N_JOINTS, 3))
    for jid, p in _REST_BODY.items():
        body[jid] = p
    pose = body[None]
    hands = np.stack([REST_HAND_LEFT, REST_HAND_RIGHT])[None]
    _place_arms(pose, hands)
    return pose[0] + BODY_ORIGIN


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    return v / np.where(n > 0, n, 1.0)


def _place_arms(pose: np.ndarray, hands: np.ndarray) -> None:
    """Fill arm joints of ``pose`` (N, 25, 3) in place from hand positions (N, 2, 3)."""
    sides = (
        (0, -1.0, JointId.ShoulderLeft, JointId.ElbowLeft, JointId.WristLeft,
         JointId.HandLeft, JointId.HandTipLeft, JointId.ThumbLeft),
        (1, 1.0, JointId.ShoulderRight, JointId.ElbowRight, JointId.WristRight,
         JointId.HandRight, JointId.HandTipRight, JointId.ThumbRight),
    )
    for k, outward, sh, el, wr, ha, tip, th in sides:
        hand = hands[:, k]
        elbow = 0.5 * (pose[:, sh] + hand)
        elbow[:, 0] += outward * ELBOW_OFFSET
        forearm = _unit(hand - elbow)
        pose[:, el] = elbow
        pose[:, wr] = hand
        pose[:, ha] = hand
        pose[:, tip] = hand + HAND_TIP_LENGTH * forearm
        thumb = hand + THUMB_LENGTH * forearm
        thumb[:, 0] -= outward * 0.02
        pose[:, th] = thumb


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _participant_traits(params: SynthParams) -> tuple[float, float]:
    """(amplitude scale, timing offset) drawn once per participant."""
    rng = np.random.Generator(np.random.PCG64(params.participant_seed))
    lo, hi = params.amplitude_scale_range
    amp = rng.uniform(lo, hi)
    offset = rng.uniform(-params.timing_jitter, params.timing_jitter)
    return float(amp), float(offset)


def _phase_profile(t: np.ndarray, bounds: Sequence[float]) -> np.ndarray:
    a, b, c, d = bounds
    rise = _smoothstep((t - a) / (b - a))
    fall = 1.0 - _smoothstep((t - c) / (d - c))
    return np.where(t < c, rise, fall)


def _synth_arrays(
    right: GestureLabel | None,
    left: GestureLabel | None,
    params: SynthParams,
    seed: int,
    left_shift: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, list[tuple[GestureLabel, int, int]]]:
    """Generate positions and hand states with ``right`` enacted by the right hand.

    ``left`` is a left-side gesture enacted at the same time (two-sided
    variant); its phases are shifted by ``left_shift`` seconds. Draws from the
    clip generator happen in a fixed order regardless of gesture, so the
    mirror of a right-side enactment equals the left-side one exactly.
    """
    fps = params.fps
    n = int(round(params.duration * fps))
    t = np.arange(n) / fps
    amp_p, offset_p = _participant_traits(params)
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = params.amplitude_scale_range
    amp = 0.5 * (amp_p + rng.uniform(lo, hi))
    tj = params.timing_jitter
    # phases stretch with clip duration so the enactment keeps its proportions
    stretch = params.duration / NOMINAL_DURATION
    bounds = [p * stretch + offset_p + rng.uniform(-tj, tj) for p in PHASES]
    sway_amp = rng.uniform(0.0, IDLE_SWAY_MAX, size=(2, 3))
    sway_freq = rng.uniform(*IDLE_FREQ_RANGE, size=(2, 3))
    sway_phase = rng.uniform(0.0, 2.0 * math.pi, size=(2, 3))
    noise = rng.standard_normal((n, N_JOINTS, 3)) * params.noise_sigma

    body = np.zeros((N_JOINTS, 3))
    for jid, p in _REST_BODY.items():
        body[jid] = p
    pose = np.repeat(body[None], n, axis=0)
    rest = np.stack([REST_HAND_LEFT, REST_HAND_RIGHT])
    sway = sway_amp[None] * np.sin(2.0 * math.pi * sway_freq[None] * t[:, None, None] + sway_phase[None])
    hands = rest[None] + sway
    states = np.zeros((n, 2), dtype=np.int64)
    spans: list[tuple[GestureLabel, int, int]] = []

    for k, gesture, shift in ((1, right, 0.0), (0, left, left_shift)):
        if gesture is None:
            continue
        canonical = gesture if gesture.is_right else gesture.mirrored()
        apex = APEX_RIGHT[canonical].copy()
        if k == 0:
            apex[0] = -apex[0]
        b = [x + shift for x in bounds]
        s = _phase_profile(t, b)
        hands[:, k] = rest[k] + amp * (apex - rest[k]) * s[:, None]
        hold = (t >= b[1]) & (t <= b[2])
        states[hold, k] = int(GESTURE_HAND_STATE[canonical])
        inside = np.nonzero((t >= b[0]) & (t <= b[3]))[0]
        if inside.size:
            spans.append((gesture, int(inside[0]), int(inside[-1])))

    _place_arms(pose, hands)
    pose = pose + BODY_ORIGIN + noise
    return np.round(pose, 6), states, spans


def _meta(gesture: str, params: SynthParams, seed: int) -> dict[str, str]:
    return {
        "gesture": gesture,
        "seed": str(seed),
        "participant_seed": str(params.participant_seed),
        "noise_sigma": repr(float(params.noise_sigma)),
        "generator": "synth-v1",
    }


def synth_clip(gesture: GestureLabel, params: SynthParams | None = None, seed: int = 0) -> Clip:
    """Deterministic enactment of an atomic gesture (or NONE for an idle clip).

    Rest, smoothstep rise, hold at the apex, return, rest. The label span
    covers rise, hold and return; NONE clips carry no span.
    """
    params = params or SynthParams()
    gesture = GestureLabel(gesture)
    if not (gesture.is_atomic or gesture is GestureLabel.NONE):
        raise ValueError(f"{gesture.name} is a composite gesture; synth_clip enacts atomic gestures or NONE")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    meta = _meta(gesture.name, params, seed)
    if gesture is GestureLabel.NONE:
        pos, states, _ = _synth_arrays(None, None, params, seed)
        return Clip(pos, states, params.fps, (), meta)
    canonical = gesture if gesture.is_right else gesture.mirrored()
    pos, states, spans = _synth_arrays(canonical, None, params, seed)
    clip = Clip(pos, states, params.fps, [LabelSpan(g, a, b) for g, a, b in spans], meta)
    if canonical is not gesture:
        clip = mirror_clip(clip).with_meta(gesture=gesture.name)
    return clip


def synth_hug_clip(params: SynthParams | None = None, seed: int = 0, offset_frames: int = 0) -> Clip:
    """Two-sided enactment: RS with the right hand and LS with the left.

    ``offset_frames`` delays the left-hand (LS) enactment relative to the
    right; negative values make it lead.
    """
    params = params or SynthParams()
    pos, states, spans = _synth_arrays(
        GestureLabel.RS, GestureLabel.LS, params, seed, left_shift=offset_frames / params.fps
    )
    meta = _meta("HUG", params, seed)
    meta["offset_frames"] = str(offset_frames)
    return Clip(pos, states, params.fps, [LabelSpan(g, a, b) for g, a, b in spans], meta)


def mirror_clip(clip: Clip) -> Clip:
    """Negate x, swap left/right joints, hand states and span labels."""
    pos = clip.positions[:, MIRROR_PERMUTATION].copy()
    pos[..., 0] = -pos[..., 0]
    states = clip.hand_states[:, ::-1]
    spans = [LabelSpan(s.gesture.mirrored(), s.start_frame, s.end_frame) for s in clip.spans]
    return Clip(pos, states, clip.fps, spans, clip.meta)


# ---------------------------------------------------------------------------
# cohorts
# ---------------------------------------------------------------------------

_COHORT_TAG = 0x5EED_C0DE


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed derived from integer keys via numpy's SeedSequence."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class CohortSpec:
    volunteers: int = 12
    clips_per_gesture: int = 5
    none_clips: int = 5
    hug_clips: int = 0
    params: SynthParams = field(default_factory=SynthParams)


COHORTS = {
    "train-default": CohortSpec(),
    "train-small": CohortSpec(volunteers=3, clips_per_gesture=2, none_clips=2),
}


def synth_cohort(name_or_spec: str | CohortSpec, seed: int) -> list[tuple[str, Clip]]:
    """Synthetic training corpus as (file stem, clip) pairs in a fixed order.

    ``train-default`` mirrors the 12-volunteer recording sessions: every
    volunteer enacts each atomic gesture 5 times plus 5 idle (NONE) clips.
    """
    if isinstance(name_or_spec, str):
        try:
            spec = COHORTS[name_or_spec]
        except KeyError:
            raise ValueError(f"unknown cohort {name_or_spec!r}; known: {', '.join(sorted(COHORTS))}") from None
    else:
        spec = name_or_spec
    out: list[tuple[str, Clip]] = []
    for v in range(spec.volunteers):
        params = replace(spec.params, participant_seed=derive_seed(_COHORT_TAG, seed, v))
        jobs = [(g, spec.clips_per_gesture) for g in ATOMIC_GESTURES]
        jobs.append((GestureLabel.NONE, spec.none_clips))
        for g, count in jobs:
            for r in range(count):
                clip_seed = derive_seed(_COHORT_TAG, seed, v, int(g), r)
                clip = synth_clip(g, params, clip_seed).with_meta(volunteer=str(v))
                out.append((f"v{v:02d}_{g.name}_{r:02d}", clip))
        for r in range(spec.hug_clips):
            clip_seed = derive_seed(_COHORT_TAG, seed, v, int(GestureLabel.HUG), r)
            clip = synth_hug_clip(params, clip_seed).with_meta(volunteer=str(v))
            out.append((f"v{v:02d}_HUG_{r:02d}", clip))
    return out
