"""Skeleton-based social-gesture recognition with two-peer fusion."""

from __future__ import annotations

from .classifier import (
    BoostModel,
    ModelBundle,
    Stump,
    TrainConfig,
    load_bundle,
    predict_confidence,
    save_bundle,
    train_adaboost,
    train_bundle,
    train_stump,
)
from .detector import DetectionEvent, Detector, DetectorConfig, classify_prompted_clip, detect_clip
from .dyad import FusionConfig, NetParams, fuse, session_step, simulate_dyad
from .evaluation import ConfusionMatrix, PilotConfig, PilotReport, confusion_matrix, report, run_pilot
from .features import WindowConfig, frame_features, window_features
from .protocol import Bye, Conf, Hello, Trigger, decode_message, encode_message
from .skeleton import (
    Clip,
    GestureLabel,
    HandState,
    JointId,
    SkeletonFrame,
    SynthParams,
    parse_clip,
    serialize_clip,
    synth_clip,
    synth_cohort,
    validate_frame,
)

__version__ = "0.1.0"

__all__ = [
    "BoostModel",
    "Bye",
    "Clip",
    "Conf",
    "ConfusionMatrix",
    "DetectionEvent",
    "Detector",
    "DetectorConfig",
    "FusionConfig",
    "GestureLabel",
    "HandState",
    "Hello",
    "JointId",
    "ModelBundle",
    "NetParams",
    "PilotConfig",
    "PilotReport",
    "SkeletonFrame",
    "Stump",
    "SynthParams",
    "TrainConfig",
    "Trigger",
    "WindowConfig",
    "classify_prompted_clip",
    "confusion_matrix",
    "decode_message",
    "detect_clip",
    "encode_message",
    "frame_features",
    "fuse",
    "load_bundle",
    "parse_clip",
    "predict_confidence",
    "report",
    "run_pilot",
    "save_bundle",
    "serialize_clip",
    "session_step",
    "simulate_dyad",
    "synth_clip",
    "synth_cohort",
    "train_adaboost",
    "train_bundle",
    "train_stump",
    "validate_frame",
    "window_features",
]
