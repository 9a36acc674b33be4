"""Framed message envelope shared by every channel in the system.

Wire format is bit-exact: a 4-byte big-endian payload length followed by
UTF-8 JSON. The JSON object always carries "type", "sender" (fingerprint),
"session_id" (nullable) and "body". Discovery datagrams reuse the JSON
payload without the length prefix (one datagram = one announcement).
"""

from __future__ import annotations

import json
import struct

from .errors import FrameTooLarge, MalformedJson, UnknownType

MAX_FRAME_BYTES = 1 << 20  # 1 MiB cap on the JSON payload

MESSAGE_TYPES = frozenset({
    "announce",
    "pair_request",
    "pair_accept",
    "hello",
    "heartbeat",
    "session_prepare",
    "round_message",
    "session_result",
    "session_abort",
    "client_request",
    "client_response",
    "error",
})

_REQUIRED_FIELDS = ("type", "sender", "session_id", "body")


def make_frame(type_: str, sender: str, body: dict, session_id: str | None = None) -> dict:
    if type_ not in MESSAGE_TYPES:
        raise UnknownType(f"unknown message type {type_!r}")
    return {"type": type_, "sender": sender, "session_id": session_id, "body": body}


def frame_payload(frame: dict) -> bytes:
    """Serialize the JSON payload deterministically (sorted keys, no spaces)."""
    for field in _REQUIRED_FIELDS:
        if field not in frame:
            raise MalformedJson(f"frame missing field {field!r}")
    if frame["type"] not in MESSAGE_TYPES:
        raise UnknownType(f"unknown message type {frame['type']!r}")
    try:
        payload = json.dumps(frame, sort_keys=True, separators=(",", ":")).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise MalformedJson(f"frame not JSON-serializable: {exc}")
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"payload is {len(payload)} bytes, cap is {MAX_FRAME_BYTES}")
    return payload


def encode_frame(frame: dict) -> bytes:
    payload = frame_payload(frame)
    return struct.pack(">I", len(payload)) + payload


def decode_payload(payload: bytes) -> dict:
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"payload is {len(payload)} bytes, cap is {MAX_FRAME_BYTES}")
    try:
        frame = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc))
    if not isinstance(frame, dict):
        raise MalformedJson("frame payload is not a JSON object")
    for field in _REQUIRED_FIELDS:
        if field not in frame:
            raise MalformedJson(f"frame missing field {field!r}")
    if frame["type"] not in MESSAGE_TYPES:
        raise UnknownType(f"unknown message type {frame['type']!r}")
    return frame


def decode_frame(data: bytes) -> dict:
    """Decode one complete length-prefixed frame (header + full payload)."""
    if len(data) < 4:
        raise MalformedJson("incomplete frame header")
    (length,) = struct.unpack(">I", data[:4])
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"declared length {length} exceeds cap {MAX_FRAME_BYTES}")
    if len(data) != 4 + length:
        raise MalformedJson(f"expected {4 + length} bytes, got {len(data)}")
    return decode_payload(data[4:])


class FrameReader:
    """Incremental decoder for a byte stream; partial reads never yield a frame."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        self._buf.extend(data)
        frames = []
        while True:
            if len(self._buf) < 4:
                break
            (length,) = struct.unpack(">I", bytes(self._buf[:4]))
            if length > MAX_FRAME_BYTES:
                raise FrameTooLarge(f"declared length {length} exceeds cap {MAX_FRAME_BYTES}")
            if len(self._buf) < 4 + length:
                break
            payload = bytes(self._buf[4:4 + length])
            del self._buf[:4 + length]
            frames.append(decode_payload(payload))
        return frames

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
