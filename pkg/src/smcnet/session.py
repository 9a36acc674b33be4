"""Session-scoped vocabulary shared by the engine, gateway and peers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

OP_SUM = "sum"
OP_AVERAGE = "average"
SUPPORTED_OPERATIONS = (OP_SUM, OP_AVERAGE)

#: protocol identifier every participant must support
PROTOCOL_SHAMIR_SUM = "shamir_sum_v1"

ROUND_DISTRIBUTE = 0
ROUND_AGGREGATE = 1
ROUND_REVEAL = 2
ROUND_NAMES = ("distribute", "aggregate_local", "reveal")


@dataclass(frozen=True)
class Participant:
    """One session participant: identity, where its engine listens, and
    whether it contributes an input (the gateway participates without one)."""

    name: str
    fingerprint: str
    public_key: str           # base64 raw Ed25519 key
    endpoint: str             # "host:port" of the participant's data listener
    contributes: bool = True
    share_index: int | None = None

    def with_index(self, index: int) -> "Participant":
        return replace(self, share_index=index)

    def to_wire(self) -> dict:
        return {
            "name": self.name,
            "fingerprint": self.fingerprint,
            "public_key": self.public_key,
            "endpoint": self.endpoint,
            "contributes": self.contributes,
            "share_index": self.share_index,
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "Participant":
        return cls(
            name=obj["name"],
            fingerprint=obj["fingerprint"],
            public_key=obj["public_key"],
            endpoint=obj["endpoint"],
            contributes=obj["contributes"],
            share_index=obj["share_index"],
        )


@dataclass(frozen=True)
class RoundPlan:
    """A computation resolved to participants, threshold and synchronized rounds.

    The round structure is fixed: distribute, aggregate locally, reveal to
    the collector. Share indices are 1..n, bijective with participants.
    """

    session_id: str
    attempt: int
    operation: str
    data_type: str
    participants: tuple[Participant, ...]
    threshold: int
    channel_wait_ms: int
    collector: str            # fingerprint of the reveal collector (the gateway)

    @property
    def n(self) -> int:
        return len(self.participants)

    @property
    def contributors(self) -> tuple[Participant, ...]:
        return tuple(p for p in self.participants if p.contributes)

    def by_fingerprint(self, fingerprint: str) -> Participant | None:
        for p in self.participants:
            if p.fingerprint == fingerprint:
                return p
        return None

    def to_wire(self) -> dict:
        return {
            "session_id": self.session_id,
            "attempt": self.attempt,
            "operation": self.operation,
            "data_type": self.data_type,
            "participants": [p.to_wire() for p in self.participants],
            "threshold": self.threshold,
            "channel_wait_ms": self.channel_wait_ms,
            "collector": self.collector,
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "RoundPlan":
        return cls(
            session_id=obj["session_id"],
            attempt=obj["attempt"],
            operation=obj["operation"],
            data_type=obj["data_type"],
            participants=tuple(Participant.from_wire(p) for p in obj["participants"]),
            threshold=obj["threshold"],
            channel_wait_ms=obj["channel_wait_ms"],
            collector=obj["collector"],
        )


@dataclass
class SessionDescriptor:
    """A client request resolved against the registry, before round planning.

    The participant set is immutable within one attempt; recovery may shrink
    it for the next attempt but never grow it.
    """

    session_id: str
    group: str
    operation: str
    data_type: str
    participants: list[Participant] = field(default_factory=list)
    retry_budget: int = 3
    attempt: int = 1
    client_ref: object = None

    def contributing(self) -> list[Participant]:
        return [p for p in self.participants if p.contributes]
