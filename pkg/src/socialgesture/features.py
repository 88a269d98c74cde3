"""Body-normalized per-frame and sliding-window features.

Per-frame features (15 values)::

    0-5   left hand:  rel_head_y, ext, fwd, rel_shoulder_y, cross, elbow
    6-11  right hand: same order
    12    hands_dist
    13-14 hand-state codes (left, right)

Lengths are divided by the shoulder width ``B``. A window vector (32 values)
holds the per-frame means (0-14), maxima (15-29) and mean hand speeds
(30 left, 31 right).

Batch and single-window paths share :func:`window_features_from_arrays`,
which accumulates over the window in a fixed sequential order; streaming and
batch evaluation therefore agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .skeleton import Clip, JointId, SkeletonFrame, validate_frame

FEATURE_SPEC_VERSION = 1
N_FRAME_FEATURES = 15
N_FEATURES = 32
MIN_SHOULDER_WIDTH = 1e-6

FRAME_FEATURE_NAMES = [
    f"{name}_{side}"
    for side in ("L", "R")
    for name in ("rel_head_y", "ext", "fwd", "rel_shoulder_y", "cross", "elbow")
] + ["hands_dist", "hstate_l", "hstate_r"]
FEATURE_NAMES = (
    [f"mean_{n}" for n in FRAME_FEATURE_NAMES]
    + [f"max_{n}" for n in FRAME_FEATURE_NAMES]
    + ["speed_L", "speed_R"]
)


class DegenerateBodyError(ValueError):
    """Shoulder width below the normalization floor."""


@dataclass(frozen=True)
class WindowConfig:
    window: int = 15
    stride: int = 1

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError("window must be >= 2 frames")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def _norm(v: np.ndarray) -> np.ndarray:
    # explicit sum of squares keeps the reduction order fixed
    return np.sqrt(v[..., 0] * v[..., 0] + v[..., 1] * v[..., 1] + v[..., 2] * v[..., 2])


def _elbow_angle(shoulder: np.ndarray, elbow: np.ndarray, wrist: np.ndarray) -> np.ndarray:
    a = shoulder - elbow
    b = wrist - elbow
    dot = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]
    sine = _norm(np.cross(a, b))
    # scalar libm atan2: SIMD ufunc paths may differ in the last ulp by array length
    angle = np.array([math.atan2(s, c) for s, c in zip(sine.ravel().tolist(), dot.ravel().tolist())])
    angle = angle.reshape(dot.shape)
    degenerate = (_norm(a) == 0) | (_norm(b) == 0)
    return np.where(degenerate, np.pi, angle)


def shoulder_width(positions: np.ndarray) -> np.ndarray:
    return _norm(positions[..., JointId.ShoulderRight, :] - positions[..., JointId.ShoulderLeft, :])


def frame_features_array(positions: np.ndarray, hand_states: np.ndarray) -> np.ndarray:
    """Vectorized per-frame features: (N, 25, 3), (N, 2) -> (N, 15)."""
    positions = np.asarray(positions, dtype=np.float64)
    B = shoulder_width(positions)
    if np.any(B < MIN_SHOULDER_WIDTH):
        raise DegenerateBodyError("shoulder width below 1e-6 m; cannot normalize")
    J = JointId
    head = positions[:, J.Head]
    spine_shoulder = positions[:, J.SpineShoulder]
    spine_mid_z = positions[:, J.SpineMid, 2]
    out = np.empty((positions.shape[0], N_FRAME_FEATURES))
    sides = (
        (0, J.HandLeft, J.ShoulderLeft, J.ShoulderRight, J.ElbowLeft, J.WristLeft),
        (6, J.HandRight, J.ShoulderRight, J.ShoulderLeft, J.ElbowRight, J.WristRight),
    )
    for base, hand_j, sh_j, opp_j, el_j, wr_j in sides:
        hand = positions[:, hand_j]
        shoulder = positions[:, sh_j]
        out[:, base + 0] = (hand[:, 1] - head[:, 1]) / B
        out[:, base + 1] = _norm(hand - spine_shoulder) / B
        out[:, base + 2] = (spine_mid_z - hand[:, 2]) / B
        out[:, base + 3] = (hand[:, 1] - shoulder[:, 1]) / B
        out[:, base + 4] = _norm(hand - positions[:, opp_j]) / B
        out[:, base + 5] = _elbow_angle(shoulder, positions[:, el_j], positions[:, wr_j])
    out[:, 12] = _norm(positions[:, J.HandLeft] - positions[:, J.HandRight]) / B
    out[:, 13:15] = hand_states
    return out


def frame_features(frame: SkeletonFrame) -> np.ndarray:
    """The 15 per-frame features of a single valid frame."""
    report = validate_frame(frame)
    if not report.ok:
        raise ValueError("invalid frame: " + "; ".join(report.violations))
    states = np.array([[int(frame.hand_state_left), int(frame.hand_state_right)]])
    return frame_features_array(frame.joints[None], states)[0]


def window_features_from_arrays(
    per_frame: np.ndarray,
    hands: np.ndarray,
    B: np.ndarray,
    window: int,
    fps: float,
) -> np.ndarray:
    """All full windows of a frame run.

    Args:
        per_frame: (N, 15) per-frame features.
        hands: (N, 2, 3) left and right hand positions.
        B: (N,) shoulder widths.
        window: frames per window.
        fps: frame rate, used for speeds.

    Returns:
        (N - window + 1, 32); row ``r`` is the window ending at frame ``r + window - 1``.
    """
    n = per_frame.shape[0]
    m = n - window + 1
    if m <= 0:
        return np.empty((0, N_FEATURES))
    # deviations from the first frame: a constant window yields its value exactly
    first = per_frame[0:m]
    total = np.zeros_like(first)
    peak = first.copy()
    for k in range(1, window):
        block = per_frame[k : k + m]
        total = total + (block - first)
        peak = np.maximum(peak, block)
    step = hands[1:] - hands[:-1]
    speed = _norm(step) * fps / B[1:, None]  # (N-1, 2), B of the later frame
    speed_sum = speed[0:m].copy()
    for k in range(1, window - 1):
        speed_sum = speed_sum + speed[k : k + m]
    out = np.empty((m, N_FEATURES))
    # clamp keeps mean <= max despite rounding
    out[:, 0:15] = np.minimum(first + total / window, peak)
    out[:, 15:30] = peak
    out[:, 30:32] = speed_sum / (window - 1)
    return out


def _hands(positions: np.ndarray) -> np.ndarray:
    return positions[:, [JointId.HandLeft, JointId.HandRight]]


def window_features(frames: Sequence[SkeletonFrame], fps: float, window: int | None = None) -> np.ndarray:
    """Feature vector of one window of valid frames."""
    if window is not None and len(frames) != window:
        raise ValueError(f"expected {window} frames, got {len(frames)}")
    if len(frames) < 2:
        raise ValueError("a window needs at least 2 frames")
    if not fps > 0:
        raise ValueError("fps must be positive")
    for i, fr in enumerate(frames):
        report = validate_frame(fr)
        if not report.ok:
            raise ValueError(f"frame {i} invalid: " + "; ".join(report.violations))
    positions = np.stack([fr.joints for fr in frames])
    states = np.array([[int(fr.hand_state_left), int(fr.hand_state_right)] for fr in frames])
    per_frame = frame_features_array(positions, states)
    return window_features_from_arrays(per_frame, _hands(positions), shoulder_width(positions), len(frames), fps)[0]


def clip_window_features(clip: Clip, config: WindowConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Window vectors of a whole clip.

    Returns:
        (end_frames, X): window end frame indices and the (M, 32) matrix,
        subsampled by ``config.stride``.
    """
    config = config or WindowConfig()
    per_frame = frame_features_array(clip.positions, clip.hand_states)
    X = window_features_from_arrays(
        per_frame, _hands(clip.positions), shoulder_width(clip.positions), config.window, clip.fps
    )
    ends = np.arange(X.shape[0]) + config.window - 1
    if config.stride > 1:
        X = X[:: config.stride]
        ends = ends[:: config.stride]
    return ends, X


def format_feature_csv(ends: np.ndarray, X: np.ndarray) -> str:
    lines = [",".join(["window_end_frame", *FEATURE_NAMES])]
    for e, row in zip(ends, X):
        lines.append(",".join([str(int(e)), *(f"{v:.6f}" for v in row)]))
    return "\n".join(lines) + "\n"
