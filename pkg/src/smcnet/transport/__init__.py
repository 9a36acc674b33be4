"""Transport abstraction: secure framed channels over two backends.

Nodes are written against the ``NodeRuntime`` facade and never block: frames,
accepted channels, datagrams and timer expiries all arrive as callbacks on
the node's single logical thread. The simulated backend drives callbacks
from a logical clock; the TCP backend drives them from an event-loop thread
fed by socket reader threads. Channel semantics are identical: a channel
exists only after mutual identity verification, is full-duplex and FIFO,
and delivers ``on_close`` exactly once unless the remote host died silently.
"""

from __future__ import annotations

from typing import Callable, Protocol


def format_endpoint(host: str, port: int) -> str:
    return f"{host}:{port}"


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    return host, int(port)


class Channel(Protocol):
    """Authenticated full-duplex frame pipe between two identities."""

    local_fingerprint: str
    remote_fingerprint: str
    remote_public_key: bytes
    purpose: str
    on_frame: Callable | None     # (channel, frame_dict) -> None
    on_close: Callable | None     # (channel, reason) -> None

    def send(self, frame: dict) -> None: ...
    def close(self) -> None: ...
    @property
    def is_open(self) -> bool: ...


class Listener(Protocol):
    endpoint: str

    def close(self) -> None: ...


class Timer(Protocol):
    def cancel(self) -> None: ...


class NodeRuntime(Protocol):
    """Per-node world interface; all callbacks run on the node's loop."""

    name: str

    def now(self) -> float:
        """Milliseconds on this backend's clock (logical or monotonic)."""
        ...

    def call_later(self, delay_ms: float, fn: Callable) -> Timer: ...

    def post(self, fn: Callable) -> None:
        """Run fn on the loop as soon as possible."""
        ...

    def open_channel(self, endpoint: str, *, identity, purpose: str,
                     expected_fingerprint: str | None,
                     on_open: Callable, on_error: Callable) -> None:
        """Dial and authenticate. Exactly one of on_open(channel) /
        on_error(exc) fires later on the loop. With expected_fingerprint
        set, a differing remote key surfaces FingerprintMismatch; without
        it the caller operates trust-on-first-use and pins afterwards."""
        ...

    def listen(self, port: int, *, identity, on_channel: Callable) -> Listener: ...

    def udp_send(self, endpoint: str, payload: bytes) -> None: ...

    def udp_listen(self, port: int, on_datagram: Callable) -> Listener: ...

    def rng(self, label: str): ...
