"""dyad v1 wire protocol: one JSON object per newline-terminated UTF-8 line.

    {"v":1,"type":"hello","peer":"A"}
    {"v":1,"type":"conf","peer":"A","t":1.0333,"c":{"R5":0.01,...}}
    {"v":1,"type":"trigger","g":"RH","t":1.0333,"fused":0.519615}
    {"v":1,"type":"bye","peer":"A"}

Times and confidences are quantized to 6 decimals when a message is built,
so ``decode_message(encode_message(m)) == m`` holds exactly. Unknown
top-level fields are ignored on decode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .skeleton import GestureLabel

PROTOCOL_VERSION = 1
MAX_LINE_BYTES = 64 * 1024


class ProtocolError(ValueError):
    """Base class of every decode failure."""


class TruncatedMessage(ProtocolError):
    pass


class MalformedMessage(ProtocolError):
    pass


class UnknownMessageType(ProtocolError):
    pass


class ConfidenceRangeError(ProtocolError):
    pass


def _q(x: float) -> float:
    return round(float(x), 6)


def _as_float(x: object) -> float | None:
    """``x`` as a float if it is a real JSON number, else None; huge integers become inf."""
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        return None
    try:
        return float(x)
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def _check_time(t: object) -> None:
    v = _as_float(t)
    if v is None or not math.isfinite(v) or v < 0:
        raise MalformedMessage(f"time must be finite and >= 0, got {t!r}")


def _check_conf(name: str, c: object) -> None:
    v = _as_float(c)
    if v is None or math.isnan(v):
        raise MalformedMessage(f"confidence for {name} must be a number, got {c!r}")
    if not 0.0 <= v <= 1.0:
        raise ConfidenceRangeError(f"confidence for {name} out of range [0, 1]")


def _check_peer(peer: object) -> None:
    if not isinstance(peer, str) or not peer:
        raise MalformedMessage("peer id must be a non-empty string")


@dataclass(frozen=True)
class Hello:
    peer: str
    version: int = PROTOCOL_VERSION

    def __post_init__(self) -> None:
        _check_peer(self.peer)


@dataclass(frozen=True)
class Conf:
    peer: str
    t: float
    conf: Mapping[GestureLabel, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_peer(self.peer)
        _check_time(self.t)
        values = {}
        for g in sorted(GestureLabel(k) for k in self.conf):
            if not g.is_atomic:
                raise MalformedMessage(f"confidence key {g.name} is not an atomic gesture")
            c = self.conf[g]
            _check_conf(g.name, c)
            values[g] = _q(c)
        object.__setattr__(self, "t", _q(self.t))
        object.__setattr__(self, "conf", values)

    def get(self, g: GestureLabel) -> float:
        return self.conf.get(g, 0.0)


@dataclass(frozen=True)
class Trigger:
    gesture: GestureLabel
    t: float
    fused: float

    def __post_init__(self) -> None:
        g = GestureLabel(self.gesture)
        if g is GestureLabel.NONE:
            raise MalformedMessage("cannot trigger NONE")
        _check_time(self.t)
        _check_conf("fused", self.fused)
        object.__setattr__(self, "gesture", g)
        object.__setattr__(self, "t", _q(self.t))
        object.__setattr__(self, "fused", _q(self.fused))


@dataclass(frozen=True)
class Bye:
    peer: str

    def __post_init__(self) -> None:
        _check_peer(self.peer)


WireMessage = Union[Hello, Conf, Trigger, Bye]


def encode_message(m: WireMessage) -> bytes:
    if isinstance(m, Hello):
        doc: dict = {"v": m.version, "type": "hello", "peer": m.peer}
    elif isinstance(m, Conf):
        doc = {"v": PROTOCOL_VERSION, "type": "conf", "peer": m.peer, "t": m.t,
               "c": {g.name: v for g, v in m.conf.items()}}
    elif isinstance(m, Trigger):
        doc = {"v": PROTOCOL_VERSION, "type": "trigger", "g": m.gesture.name, "t": m.t, "fused": m.fused}
    elif isinstance(m, Bye):
        doc = {"v": PROTOCOL_VERSION, "type": "bye", "peer": m.peer}
    else:
        raise TypeError(f"not a wire message: {m!r}")
    return (json.dumps(doc, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def _field(doc: dict, key: str) -> object:
    try:
        return doc[key]
    except KeyError:
        raise MalformedMessage(f"missing field {key!r}") from None


def decode_message(data: bytes) -> WireMessage:
    """Decode exactly one newline-terminated line; raises a :class:`ProtocolError` subclass otherwise."""
    if not isinstance(data, (bytes, bytearray)):
        raise MalformedMessage("expected bytes")
    if not data.endswith(b"\n"):
        raise TruncatedMessage("line is not newline-terminated")
    body = bytes(data[:-1])
    if body.endswith(b"\r"):
        body = body[:-1]
    if b"\n" in body:
        raise MalformedMessage("more than one line")
    if len(body) > MAX_LINE_BYTES:
        raise MalformedMessage("line too long")
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedMessage("line is not valid UTF-8") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        # truncation is a framing property (no newline); a complete line of bad JSON is malformed
        raise MalformedMessage(f"invalid JSON: {exc.msg}") from None
    except RecursionError:
        raise MalformedMessage("JSON nested too deeply") from None
    if not isinstance(doc, dict):
        raise MalformedMessage("message must be a JSON object")
    if doc.get("v") != PROTOCOL_VERSION or isinstance(doc.get("v"), bool):
        raise MalformedMessage(f"unsupported protocol version {doc.get('v')!r}")
    kind = _field(doc, "type")
    try:
        if kind == "hello":
            return Hello(_field(doc, "peer"), PROTOCOL_VERSION)
        if kind == "bye":
            return Bye(_field(doc, "peer"))
        if kind == "conf":
            raw = _field(doc, "c")
            if not isinstance(raw, dict):
                raise MalformedMessage("'c' must be an object")
            conf = {}
            for k, v in raw.items():
                try:
                    g = GestureLabel[k]
                except KeyError:
                    raise MalformedMessage(f"unknown gesture {k!r} in confidences") from None
                _check_conf(k, v)
                conf[g] = v
            return Conf(_field(doc, "peer"), _field(doc, "t"), conf)
        if kind == "trigger":
            g = _field(doc, "g")
            try:
                label = GestureLabel[g] if isinstance(g, str) else None
            except KeyError:
                label = None
            if label is None or label is GestureLabel.NONE:
                raise MalformedMessage(f"unknown trigger gesture {g!r}")
            return Trigger(label, _field(doc, "t"), _field(doc, "fused"))
    except ProtocolError:
        raise
    except (TypeError, ValueError) as exc:
        raise MalformedMessage(str(exc)) from None
    raise UnknownMessageType(f"unknown message type {kind!r}")


class LineDecoder:
    """Incremental framer for a byte stream; yields messages or raises per bad line."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> Iterator[WireMessage]:
        self._buf.extend(chunk)
        while True:
            i = self._buf.find(b"\n")
            if i < 0:
                if len(self._buf) > MAX_LINE_BYTES:
                    self._buf.clear()
                    raise MalformedMessage("line too long")
                return
            line = bytes(self._buf[: i + 1])
            del self._buf[: i + 1]
            if line.strip():
                yield decode_message(line)

    def close(self) -> None:
        if self._buf.strip():
            self._buf.clear()
            raise TruncatedMessage("stream ended inside a line")
        self._buf.clear()
