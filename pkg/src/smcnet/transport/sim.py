"""Deterministic in-process network with fault injection.

One logical clock drives every host; events are a heap of (time, seq)
entries, so identical seeds and fault plans replay identical transcripts.
Frames pay a sender-occupancy cost per frame plus per-link latency, which
is what makes session duration grow linearly with the participant count,
mirroring serialized fan-out on real nodes. Faults never surface as API
errors: they manifest as missing, duplicated or reordered frames.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from ..errors import FingerprintMismatch, HandshakeTimeout, Refused
from ..messages import frame_payload
from . import format_endpoint, parse_endpoint

CONNECT_TIMEOUT_MS = 5000.0


@dataclass
class DropLink:
    """Silence a link (both directions) from a point in time onward."""
    a: str
    b: str
    at_ms: float = 0.0
    purpose: str | None = None    # None = every channel between the two hosts

    def matches(self, src: str, dst: str, purpose: str, now: float) -> bool:
        if now < self.at_ms:
            return False
        if {src, dst} != {self.a, self.b}:
            return False
        return self.purpose is None or self.purpose == purpose


@dataclass
class KillPeer:
    """Silence every link of a peer once it sends a message of this round."""
    peer: str
    at_round: int


@dataclass
class DropFrames:
    """Drop the next ``count`` frames of a type from a sender (e.g. one heartbeat)."""
    frame_type: str
    sender: str
    count: int = 1
    after_ms: float = 0.0


@dataclass
class FaultPlan:
    link_latency_ms: float = 0.2
    latency_jitter_ms: float = 0.0
    per_frame_ms: float = 0.05
    handshake_ms: float = 0.3
    drop_links: list[DropLink] = field(default_factory=list)
    kill_peers: list[KillPeer] = field(default_factory=list)
    drop_frames: list[DropFrames] = field(default_factory=list)
    duplicate: bool = False
    reorder: bool = False

    def to_dict(self) -> dict:
        return {
            "link_latency_ms": self.link_latency_ms,
            "latency_jitter_ms": self.latency_jitter_ms,
            "per_frame_ms": self.per_frame_ms,
            "handshake_ms": self.handshake_ms,
            "drop_links": [vars(d) for d in self.drop_links],
            "kill_peers": [vars(k) for k in self.kill_peers],
            "drop_frames": [vars(d) for d in self.drop_frames],
            "duplicate": self.duplicate,
            "reorder": self.reorder,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FaultPlan":
        plan = cls(
            link_latency_ms=obj.get("link_latency_ms", 0.2),
            latency_jitter_ms=obj.get("latency_jitter_ms", 0.0),
            per_frame_ms=obj.get("per_frame_ms", 0.05),
            handshake_ms=obj.get("handshake_ms", 0.3),
            duplicate=obj.get("duplicate", False),
            reorder=obj.get("reorder", False),
        )
        plan.drop_links = [DropLink(**d) for d in obj.get("drop_links", [])]
        plan.kill_peers = [KillPeer(**k) for k in obj.get("kill_peers", [])]
        plan.drop_frames = [DropFrames(**d) for d in obj.get("drop_frames", [])]
        return plan


@dataclass
class TranscriptEntry:
    sent_at: float
    src: str
    dst: str
    purpose: str
    payload: bytes
    delivered: bool

    def frame(self) -> dict:
        return json.loads(self.payload.decode("utf-8"))


class SimTimer:
    __slots__ = ("_cancelled",)

    def __init__(self):
        self._cancelled = False

    def cancel(self):
        self._cancelled = True


class SimChannelEnd:
    """One side of a simulated secure channel."""

    def __init__(self, net: "SimNet", host: "SimHost", local_identity, purpose: str):
        self.net = net
        self.host = host
        self.purpose = purpose
        self.local_fingerprint = local_identity.fingerprint
        self.remote_fingerprint: str | None = None
        self.remote_public_key: bytes | None = None
        self.peer: SimChannelEnd | None = None
        self.on_frame = None
        self.on_close = None
        self._open = True

    @property
    def is_open(self) -> bool:
        return self._open

    def send(self, frame: dict) -> None:
        if not self._open:
            return
        self.net._transmit(self, frame)

    def close(self) -> None:
        if not self._open:
            return
        self._open = False
        peer = self.peer
        if peer is not None and peer._open:
            def notify():
                if peer._open:
                    peer._open = False
                    if peer.on_close:
                        peer.on_close(peer, "remote_closed")
            self.net.schedule(self.net.plan.link_latency_ms, notify, host=peer.host)


class SimListener:
    def __init__(self, host: "SimHost", port: int, identity, on_channel):
        self.host = host
        self.port = port
        self.identity = identity
        self.on_channel = on_channel
        self.endpoint = format_endpoint(host.name, port)

    def close(self):
        self.host.listeners.pop(self.port, None)


class SimUdpListener:
    def __init__(self, host: "SimHost", port: int, on_datagram):
        self.host = host
        self.port = port
        self.on_datagram = on_datagram
        self.endpoint = format_endpoint(host.name, port)

    def close(self):
        self.host.udp_listeners.pop(self.port, None)


class SimHost:
    """A virtual machine on the simulated network; implements NodeRuntime."""

    def __init__(self, net: "SimNet", name: str):
        self.net = net
        self.name = name
        self.alive = True
        self.listeners: dict[int, SimListener] = {}
        self.udp_listeners: dict[int, SimUdpListener] = {}
        self.next_free_send = 0.0
        self._ephemeral = 50000

    # -- NodeRuntime surface

    def now(self) -> float:
        return self.net.clock

    def call_later(self, delay_ms: float, fn) -> SimTimer:
        timer = SimTimer()

        def fire():
            if not timer._cancelled:
                fn()

        self.net.schedule(delay_ms, fire, host=self)
        return timer

    def post(self, fn) -> None:
        self.net.schedule(0.0, fn, host=self)

    def open_channel(self, endpoint: str, *, identity, purpose: str,
                     expected_fingerprint: str | None, on_open, on_error) -> None:
        self.net._dial(self, endpoint, identity, purpose,
                       expected_fingerprint, on_open, on_error)

    def listen(self, port: int, *, identity, on_channel) -> SimListener:
        if port == 0:
            self._ephemeral += 1
            port = self._ephemeral
        listener = SimListener(self, port, identity, on_channel)
        self.listeners[port] = listener
        return listener

    def udp_send(self, endpoint: str, payload: bytes) -> None:
        self.net._udp_send(self, endpoint, payload)

    def udp_listen(self, port: int, on_datagram) -> SimUdpListener:
        listener = SimUdpListener(self, port, on_datagram)
        self.udp_listeners[port] = listener
        return listener

    def rng(self, label: str) -> random.Random:
        return random.Random(f"{self.net.seed}:{self.name}:{label}")

    # -- lifecycle controls used by the harness

    def silence(self) -> None:
        """Process death: callbacks stop, links go quiet, no close events."""
        self.alive = False

    def reset(self) -> None:
        """Prepare the host for a restarted daemon instance."""
        self.listeners.clear()
        self.udp_listeners.clear()
        self.next_free_send = self.net.clock
        self.alive = True


class SimNet:
    """The scheduler, the wire and the fault injector."""

    #: broadcast pseudo-host for discovery datagrams
    BROADCAST = "*"

    def __init__(self, seed: int = 0, fault_plan: FaultPlan | None = None):
        self.seed = seed
        self.plan = fault_plan or FaultPlan()
        self.clock = 0.0
        self.hosts: dict[str, SimHost] = {}
        self.transcript: list[TranscriptEntry] = []
        self._heap: list = []
        self._seq = 0
        self._rng = random.Random(f"simnet:{seed}")
        self._killed: set[str] = set()
        self._drop_budgets = [rule.count for rule in self.plan.drop_frames]
        self._fifo_floor: dict[int, float] = {}

    def host(self, name: str) -> SimHost:
        if name not in self.hosts:
            self.hosts[name] = SimHost(self, name)
        return self.hosts[name]

    # -- scheduling

    def schedule(self, delay_ms: float, fn, host: SimHost | None = None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (self.clock + delay_ms, self._seq, fn, host))

    def _pop_and_run(self) -> bool:
        if not self._heap:
            return False
        when, _, fn, host = heapq.heappop(self._heap)
        self.clock = max(self.clock, when)
        if host is None or host.alive:
            fn()
        return True

    def run_for(self, ms: float) -> None:
        """Advance the clock by ms, running everything due on the way."""
        deadline = self.clock + ms
        while self._heap and self._heap[0][0] <= deadline:
            self._pop_and_run()
        self.clock = max(self.clock, deadline)

    def run_until(self, pred, timeout_ms: float = 60000.0) -> bool:
        deadline = self.clock + timeout_ms
        while not pred():
            if not self._heap or self._heap[0][0] > deadline:
                self.clock = deadline
                return pred()
            self._pop_and_run()
        return True

    # -- fault helpers

    def kill_host(self, name: str) -> None:
        self._killed.add(name)
        if name in self.hosts:
            self.hosts[name].silence()

    def revive_host(self, name: str) -> None:
        self._killed.discard(name)
        if name in self.hosts:
            self.hosts[name].reset()

    def _kill_trigger(self, src: str, frame: dict) -> bool:
        if frame.get("type") != "round_message":
            return False
        for rule in self.plan.kill_peers:
            if rule.peer == src and frame["body"].get("round", -1) >= rule.at_round:
                return True
        return False

    def _drop_rule_hit(self, src: str, frame: dict) -> bool:
        for i, rule in enumerate(self.plan.drop_frames):
            if (rule.sender == src and rule.frame_type == frame.get("type")
                    and self.clock >= rule.after_ms and self._drop_budgets[i] > 0):
                self._drop_budgets[i] -= 1
                return True
        return False

    def _link_dropped(self, src: str, dst: str, purpose: str) -> bool:
        return any(d.matches(src, dst, purpose, self.clock) for d in self.plan.drop_links)

    # -- frame transmission

    def _transmit(self, end: SimChannelEnd, frame: dict) -> None:
        payload = frame_payload(frame)   # validates shape and the 1 MiB cap
        peer = end.peer
        src, dst = end.host.name, peer.host.name
        if self._kill_trigger(src, frame):
            self.kill_host(src)
        dropped = (
            src in self._killed
            or dst in self._killed
            or self._link_dropped(src, dst, end.purpose)
            or self._drop_rule_hit(src, frame)
        )
        self.transcript.append(
            TranscriptEntry(self.clock, src, dst, end.purpose, payload, not dropped))
        if dropped:
            return

        host = end.host
        t_send = max(self.clock, host.next_free_send)
        host.next_free_send = t_send + self.plan.per_frame_ms
        latency = self.plan.link_latency_ms
        if self.plan.latency_jitter_ms:
            latency += self._rng.uniform(0, self.plan.latency_jitter_ms)
        arrival = t_send + self.plan.per_frame_ms + latency
        if not self.plan.reorder:
            floor = self._fifo_floor.get(id(peer), 0.0)
            arrival = max(arrival, floor + 1e-6)
            self._fifo_floor[id(peer)] = arrival

        def deliver():
            if peer._open and dst not in self._killed and peer.on_frame:
                peer.on_frame(peer, json.loads(payload.decode("utf-8")))

        self.schedule(arrival - self.clock, deliver, host=peer.host)
        if self.plan.duplicate and self._rng.random() < 0.05:
            self.schedule(arrival - self.clock + 5 * self.plan.link_latency_ms,
                          deliver, host=peer.host)

    # -- dialing

    def _dial(self, host: SimHost, endpoint: str, identity, purpose: str,
              expected_fingerprint: str | None, on_open, on_error) -> None:
        target_name, port = parse_endpoint(endpoint)
        cost = self.plan.per_frame_ms + self.plan.link_latency_ms + self.plan.handshake_ms

        def fail_with_timeout():
            self.schedule(CONNECT_TIMEOUT_MS - cost,
                          lambda: on_error(HandshakeTimeout(f"no answer from {endpoint}")),
                          host=host)

        def attempt():
            if target_name in self._killed or self._link_dropped(host.name, target_name, purpose):
                fail_with_timeout()
                return
            target = self.hosts.get(target_name)
            listener = target.listeners.get(port) if target else None
            if listener is None:
                on_error(Refused(f"{endpoint} is not listening"))
                return
            remote_identity = listener.identity
            if expected_fingerprint and remote_identity.fingerprint != expected_fingerprint:
                on_error(FingerprintMismatch(
                    f"{endpoint} presented {remote_identity.fingerprint[:16]}, "
                    f"expected {expected_fingerprint[:16]}"))
                return
            a = SimChannelEnd(self, host, identity, purpose)
            b = SimChannelEnd(self, target, remote_identity, purpose)
            a.peer, b.peer = b, a
            a.remote_fingerprint = remote_identity.fingerprint
            a.remote_public_key = remote_identity.public_raw
            b.remote_fingerprint = identity.fingerprint
            b.remote_public_key = identity.public_raw
            listener.on_channel(b)
            on_open(a)

        self.schedule(cost, attempt, host=host)

    # -- datagrams

    def _udp_send(self, host: SimHost, endpoint: str, payload: bytes) -> None:
        target_name, port = parse_endpoint(endpoint)
        if host.name in self._killed:
            return
        targets = (
            list(self.hosts.values()) if target_name == self.BROADCAST
            else [self.hosts[target_name]] if target_name in self.hosts else []
        )
        for target in targets:
            listener = target.udp_listeners.get(port)
            self.transcript.append(TranscriptEntry(
                self.clock, host.name, target.name, "udp", payload,
                listener is not None and target.name not in self._killed))
            if listener is None or target.name in self._killed:
                continue

            def deliver(listener=listener):
                cb = listener.host.udp_listeners.get(listener.port)
                if cb is not None:
                    cb.on_datagram(payload)

            self.schedule(self.plan.link_latency_ms, deliver, host=target)
