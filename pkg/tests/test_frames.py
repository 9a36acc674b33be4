"""Wire framing: 4-byte big-endian length prefix plus UTF-8 JSON."""

from __future__ import annotations

import json
import random
import string
import struct

import pytest

from smcnet.errors import FrameTooLarge, MalformedJson, UnknownType
from smcnet.messages import (
    MAX_FRAME_BYTES,
    FrameReader,
    decode_frame,
    encode_frame,
    make_frame,
)


def random_frame(rng):
    body = {
        "k" + str(i): rng.choice([rng.randrange(10**9), "".join(rng.choices(string.ascii_letters, k=rng.randrange(30)))])
        for i in range(rng.randrange(6))
    }
    return make_frame("heartbeat", sender="ab" * 32, body=body, session_id=None)


class TestRoundTrip:
    def test_identity_for_random_frames(self):
        rng = random.Random(4)
        for _ in range(200):
            frame = random_frame(rng)
            data = encode_frame(frame)
            assert decode_frame(data) == frame
            # re-encoding the decoded frame is byte-identical
            assert encode_frame(decode_frame(data)) == data

    def test_length_prefix_is_payload_byte_length(self):
        frame = make_frame("heartbeat", sender="cd" * 32, body={"seq": 1})
        data = encode_frame(frame)
        (length,) = struct.unpack(">I", data[:4])
        assert length == len(data) - 4
        assert json.loads(data[4:].decode("utf-8")) == frame

    def test_unicode_payload(self):
        frame = make_frame("client_request", sender="ef" * 32, body={"label": "büro/zähler"})
        assert decode_frame(encode_frame(frame)) == frame


class TestLimits:
    def test_oversized_payload_rejected(self):
        frame = make_frame("round_message", sender="ab" * 32, body={"blob": "x" * (2 << 20)})
        with pytest.raises(FrameTooLarge):
            encode_frame(frame)

    def test_oversized_declared_length_rejected(self):
        data = struct.pack(">I", MAX_FRAME_BYTES + 1) + b"{}"
        with pytest.raises(FrameTooLarge):
            decode_frame(data)
        with pytest.raises(FrameTooLarge):
            FrameReader().feed(data)

    def test_unknown_type(self):
        with pytest.raises(UnknownType):
            make_frame("gossip", sender="ab" * 32, body={})
        payload = json.dumps(
            {"type": "gossip", "sender": "", "session_id": None, "body": {}}).encode()
        with pytest.raises(UnknownType):
            decode_frame(struct.pack(">I", len(payload)) + payload)

    def test_malformed_json(self):
        payload = b"{nope"
        with pytest.raises(MalformedJson):
            decode_frame(struct.pack(">I", len(payload)) + payload)

    def test_missing_fields(self):
        payload = json.dumps({"type": "heartbeat", "sender": "x"}).encode()
        with pytest.raises(MalformedJson):
            decode_frame(struct.pack(">I", len(payload)) + payload)


class TestFrameReader:
    def test_partial_reads_never_yield(self):
        frame = make_frame("heartbeat", sender="ab" * 32, body={"seq": 42})
        data = encode_frame(frame)
        reader = FrameReader()
        for i in range(len(data) - 1):
            assert reader.feed(data[i:i + 1]) == []
        assert reader.feed(data[-1:]) == [frame]
        assert reader.pending_bytes == 0

    def test_coalesced_frames_split(self):
        frames = [make_frame("heartbeat", sender="ab" * 32, body={"seq": i}) for i in range(5)]
        blob = b"".join(encode_frame(f) for f in frames)
        reader = FrameReader()
        assert reader.feed(blob) == frames

    def test_random_chunking(self):
        rng = random.Random(17)
        frames = [random_frame(rng) for _ in range(20)]
        blob = b"".join(encode_frame(f) for f in frames)
        reader = FrameReader()
        got = []
        i = 0
        while i < len(blob):
            step = rng.randrange(1, 40)
            got.extend(reader.feed(blob[i:i + step]))
            i += step
        assert got == frames
