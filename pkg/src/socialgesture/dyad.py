"""Two-peer sessions: confidence fusion, same-label matching, network simulation.

Each peer streams its per-frame confidences to the other as ``Conf``
messages. A dyadic gesture (R5, L5, RH, LH, and HOLD_HANDS when enabled)
fires only when both sides show it::

    a = local conf[g], b = remote conf[g]
    a >= floor and b >= floor and sqrt(a * b) >= threshold

with the two samples at most ``match_window`` seconds apart. The other
gestures fire from the local confidence alone; HUG scores min(LS, RS).

A trigger disarms its gesture until the score falls below ``release`` and
``refractory`` seconds have passed, so a held gesture fires once.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import ModelBundle
from .detector import DetectorConfig, detect_clip
from .protocol import (
    Bye,
    Conf,
    Hello,
    ProtocolError,
    Trigger,
    WireMessage,
    encode_message,
)
from .skeleton import ATOMIC_GESTURES, Clip, GestureLabel, derive_seed

G = GestureLabel
DYADIC_BASE = (G.R5, G.L5, G.RH, G.LH)
LOCAL_GESTURES = (G.RS, G.LS, G.RM, G.LM, G.HUG)
_SIM_TAG = 0x4459_4144  # "DYAD"


def fuse(c_local: float, c_remote: float) -> float:
    """Geometric mean of two confidences in [0, 1]."""
    for name, c in (("c_local", c_local), ("c_remote", c_remote)):
        if not (isinstance(c, (int, float, np.floating)) and 0.0 <= c <= 1.0):
            raise ValueError(f"{name} must be in [0, 1], got {c!r}")
    # the product commutes exactly, so fuse(a, b) == fuse(b, a) bit for bit
    return math.sqrt(float(c_local) * float(c_remote))


@dataclass(frozen=True)
class FusionConfig:
    dyad_threshold: float = 0.5
    per_peer_floor: float = 0.2
    match_window: float = 0.5
    refractory: float = 1.0
    release: float = 0.4
    hold_hands: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.per_peer_floor <= self.dyad_threshold <= 1.0:
            raise ValueError("need 0 <= per_peer_floor <= dyad_threshold <= 1")
        if not 0.0 <= self.release <= self.dyad_threshold:
            raise ValueError("need 0 <= release <= dyad_threshold")
        if not (self.match_window >= 0 and self.refractory >= 0):
            raise ValueError("match_window and refractory must be >= 0")

    @property
    def dyadic_set(self) -> tuple[GestureLabel, ...]:
        return DYADIC_BASE + ((G.HOLD_HANDS,) if self.hold_hands else ())

    @property
    def gestures(self) -> tuple[GestureLabel, ...]:
        """Every gesture a session can trigger, in code order."""
        return tuple(sorted(self.dyadic_set + LOCAL_GESTURES))


def _peer_score(conf: Conf, g: GestureLabel) -> float:
    if g is G.HOLD_HANDS:
        return max(conf.get(G.RM), conf.get(G.LM))
    if g is G.HUG:
        return min(conf.get(G.LS), conf.get(G.RS))
    return conf.get(g)


@dataclass
class SessionState:
    peer_id: str
    remote_id: str | None = None
    local: Conf | None = None
    remote: Conf | None = None
    clock: float = 0.0
    last_trigger: dict = field(default_factory=dict)  # gesture -> session time
    armed: dict = field(default_factory=dict)  # gesture -> bool
    triggers: list = field(default_factory=list)
    stale: int = 0
    closed: bool = False

    @property
    def hello_done(self) -> bool:
        return self.remote_id is not None


def _score(state: SessionState, g: GestureLabel, config: FusionConfig) -> float:
    """Current score for ``g``; 0 when a dyadic gesture lacks a matching remote sample."""
    a = _peer_score(state.local, g)
    if g not in config.dyadic_set:
        return a
    r = state.remote
    if r is None or abs(state.local.t - r.t) > config.match_window:
        return 0.0
    b = _peer_score(r, g)
    if a < config.per_peer_floor or b < config.per_peer_floor:
        return 0.0
    return fuse(a, b)


def _evaluate(state: SessionState, config: FusionConfig) -> list[Trigger]:
    if state.local is None:
        return []
    scores = {g: _score(state, g, config) for g in config.gestures}
    hug_low = scores[G.HUG] < config.release
    out = []
    for g in config.gestures:
        s = scores[g]
        if s < config.release:
            state.armed[g] = True
        if s < config.dyad_threshold or not state.armed.get(g, True):
            continue
        if g in (G.LS, G.RS) and not hug_low:
            continue  # a developing HUG swallows its constituents
        last = state.last_trigger.get(g)
        if last is not None and state.clock - last < config.refractory:
            continue
        trig = Trigger(g, state.clock, min(s, 1.0))
        state.armed[g] = False
        state.last_trigger[g] = state.clock
        state.triggers.append(trig)
        out.append(trig)
    return out


def session_step(
    state: SessionState,
    incoming: WireMessage,
    config: FusionConfig | None = None,
    *,
    local: bool = False,
    now: float | None = None,
) -> tuple[SessionState, list[Trigger]]:
    """Apply one message to a session and return the triggers it causes.

    ``local=True`` marks ``incoming`` as this peer's own confidence sample;
    anything else came from the remote peer. ``now`` is the session clock
    at handling time (defaults to the local sample time, or the current clock).

    Raises:
        ProtocolError: remote data before Hello, or a message of the wrong kind.
    """
    config = config or FusionConfig()
    t_now = state.clock if now is None else now
    if local:
        if not isinstance(incoming, Conf):
            raise ProtocolError("local input must be a Conf sample")
        if not state.hello_done:
            raise ProtocolError("Conf before Hello exchange")
        if now is None:
            t_now = max(state.clock, incoming.t)
        state.clock = max(state.clock, t_now)
        state.local = incoming
        return state, _evaluate(state, config)

    if isinstance(incoming, Hello):
        if state.remote_id is not None and incoming.peer != state.remote_id:
            raise ProtocolError(f"second Hello from a different peer {incoming.peer!r}")
        state.remote_id = incoming.peer
        return state, []
    if not state.hello_done:
        raise ProtocolError(f"{type(incoming).__name__} before Hello")
    state.clock = max(state.clock, t_now)
    if isinstance(incoming, Bye):
        state.closed = True
        return state, []
    if isinstance(incoming, Trigger):
        return state, []  # partner notifications carry no fusion input
    if incoming.peer != state.remote_id:
        raise ProtocolError(f"Conf from unknown peer {incoming.peer!r}")
    previous = state.remote
    if (previous is not None and incoming.t <= previous.t) or incoming.t < state.clock - config.match_window:
        state.stale += 1
        return state, []
    state.remote = incoming
    return state, _evaluate(state, config)


@dataclass(frozen=True)
class NetParams:
    latency: float = 0.08
    jitter: float = 0.02
    drop_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.latency) and self.latency >= 0):
            raise ValueError("latency must be >= 0")
        if not (math.isfinite(self.jitter) and self.jitter >= 0):
            raise ValueError("jitter must be >= 0")
        # 1.0 is admitted: it models a dead link
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop_rate must be in [0, 1]")


@dataclass(frozen=True)
class Delivery:
    seq: int
    src: str
    dst: str
    kind: str
    sent: float
    arrival: float | None  # None: dropped

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "src": self.src, "dst": self.dst, "kind": self.kind,
             "sent": round(self.sent, 6), "arrival": None if self.arrival is None else round(self.arrival, 6)},
            separators=(",", ":"),
        )


@dataclass
class DyadResult:
    triggers: dict  # peer id -> list[Trigger]
    trace: list[Delivery]
    stale: dict  # peer id -> count

    def dyadic(self, peer: str, config: FusionConfig | None = None) -> list[Trigger]:
        config = config or FusionConfig()
        return [t for t in self.triggers[peer] if t.gesture in config.dyadic_set]

    @property
    def dropped(self) -> int:
        return sum(d.arrival is None for d in self.trace)

    def format_trace(self) -> str:
        return "".join(d.to_json() + "\n" for d in self.trace)

    def format_log(self) -> str:
        lines = []
        for peer in sorted(self.triggers):
            for t in self.triggers[peer]:
                lines.append(f"{peer},{t.gesture.name},{t.t:.6f},{t.fused:.6f}")
        return "".join(line + "\n" for line in lines)


def clip_confidence_series(clip: Clip, bundle: ModelBundle, config: DetectorConfig | None = None) -> np.ndarray:
    """Per-frame (N, 8) confidences as a streaming detector reports them; zero before the first full window."""
    config = config or DetectorConfig()
    res = detect_clip(clip, bundle, config)
    out = np.zeros((len(clip), len(ATOMIC_GESTURES)))
    if len(res.end_frames):
        out[res.end_frames] = res.confidences
    return out


def simulate_dyad(
    clip_a: Clip,
    clip_b: Clip,
    bundle: ModelBundle,
    detector_config: DetectorConfig | None = None,
    fusion_config: FusionConfig | None = None,
    net: NetParams | None = None,
    peer_ids: tuple[str, str] = ("A", "B"),
) -> DyadResult:
    """Run two peers on one virtual clock.

    Every frame each peer sends a Conf; it arrives after latency plus uniform
    jitter, or is dropped. Hello (at t = 0) and Bye (after a peer's last
    frame) are always delivered. At each frame tick, deliveries due by then
    are handled in (arrival, send order), then peer A steps, then peer B.
    """
    if clip_a.fps != clip_b.fps:
        raise ValueError(f"fps mismatch: {clip_a.fps} vs {clip_b.fps}")
    fusion_config = fusion_config or FusionConfig()
    net = net or NetParams()
    fps = clip_a.fps
    a_id, b_id = peer_ids
    if a_id == b_id:
        raise ValueError("peer ids must differ")
    series = {a_id: clip_confidence_series(clip_a, bundle, detector_config),
              b_id: clip_confidence_series(clip_b, bundle, detector_config)}
    other = {a_id: b_id, b_id: a_id}
    rngs = {p: np.random.Generator(np.random.PCG64(derive_seed(_SIM_TAG, net.seed, k)))
            for k, p in enumerate(peer_ids)}
    sessions = {p: SessionState(p) for p in peer_ids}
    trace: list[Delivery] = []
    queue: list[tuple[float, int, str, WireMessage]] = []

    def send(src: str, msg: WireMessage, t: float, reliable: bool) -> None:
        rng = rngs[src]
        # both draws happen for every message so the stream stays aligned
        u_drop = rng.random()
        u_jit = rng.uniform(-net.jitter, net.jitter) if net.jitter > 0 else 0.0
        dropped = not reliable and u_drop < net.drop_rate
        arrival = None if dropped else t + max(0.0, net.latency + u_jit)
        # exercise the codec on the way out, as a real transport would
        encode_message(msg)
        seq = len(trace)
        trace.append(Delivery(seq, src, other[src], type(msg).__name__.lower(), t, arrival))
        if arrival is not None:
            heapq.heappush(queue, (arrival, seq, other[src], msg))

    def deliver_until(t: float) -> None:
        while queue and queue[0][0] <= t:
            arrival, _, dst, msg = heapq.heappop(queue)
            session_step(sessions[dst], msg, fusion_config, now=arrival)

    for p in peer_ids:
        sessions[p].remote_id = other[p]  # handshake at t = 0
        trace.append(Delivery(len(trace), p, other[p], "hello", 0.0, 0.0))
    lengths = {a_id: len(clip_a), b_id: len(clip_b)}
    for i in range(max(lengths.values())):
        t = i / fps
        deliver_until(t)
        for p in peer_ids:
            if i < lengths[p]:
                row = series[p][i]
                msg = Conf(p, t, {g: float(min(max(row[k], 0.0), 1.0)) for k, g in enumerate(ATOMIC_GESTURES)})
                session_step(sessions[p], msg, fusion_config, local=True, now=t)
                send(p, msg, t, reliable=False)
            elif i == lengths[p]:
                send(p, Bye(p), t, reliable=True)
    end = max(lengths.values()) / fps
    for p in peer_ids:
        if lengths[p] == max(lengths.values()):
            send(p, Bye(p), end, reliable=True)
    deliver_until(math.inf)
    return DyadResult(
        {p: list(sessions[p].triggers) for p in peer_ids},
        trace,
        {p: sessions[p].stale for p in peer_ids},
    )


def trigger_sequence(triggers: Sequence[Trigger]) -> list[GestureLabel]:
    return [t.gesture for t in triggers]
