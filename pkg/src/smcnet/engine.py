"""Round-synchronized secure-summation engine.

The engine is a pure transition core: feed it events (local input, channels
ready, round messages), get back outbound messages and eventually the
revealed result. It performs no IO and keeps no clocks; daemons own timers,
channels and retries. One engine instance drives one participant in one
session attempt.

Round structure: every contributor splits its input into one share per
participant and distributes them; each participant sums the shares it
received into a single share of the total; everyone reveals that sum share
to the collector, which reconstructs the total once threshold+1 reveals
arrived. A round never advances before all messages expected for it are in.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import (
    DuplicateMessage,
    GroupTooSmall,
    OutOfOrderMessage,
    SmcError,
    UnknownSender,
    UnsupportedOperation,
)
from .fieldmath import (
    PRIME,
    Share,
    check_element,
    default_threshold,
    f_add,
    reconstruct,
    share_secret,
)
from .session import (
    ROUND_DISTRIBUTE,
    ROUND_REVEAL,
    RoundPlan,
    SessionDescriptor,
    SUPPORTED_OPERATIONS,
)

#: smallest number of contributing peers allowed in a session
MIN_CONTRIBUTORS = 3


class ProtocolViolation(SmcError):
    """Round message is structurally inconsistent with the plan (bad share index)."""
    code = "protocol_violation"


# --- events -------------------------------------------------------------------

@dataclass(frozen=True)
class LocalInput:
    value: int


@dataclass(frozen=True)
class ChannelsReady:
    pass


@dataclass(frozen=True)
class RoundMessage:
    sender: str          # fingerprint
    round: int
    share: Share

    def to_body(self) -> dict:
        return {"round": self.round, "share": self.share.to_wire()}

    @classmethod
    def from_body(cls, sender: str, body: dict) -> "RoundMessage":
        return cls(sender=sender, round=int(body["round"]), share=Share.from_wire(body["share"]))


@dataclass(frozen=True)
class Outbound:
    dest: str            # fingerprint; may equal the local node (self-delivery)
    message: RoundMessage


# --- planning -------------------------------------------------------------------

def plan_session(descriptor: SessionDescriptor, *,
                 threshold: int | None = None,
                 channel_wait_ms: int = 0,
                 min_contributors: int = MIN_CONTRIBUTORS) -> RoundPlan:
    """Resolve a descriptor into a deterministic round plan.

    Share indices are assigned by ascending fingerprint; the default
    threshold is floor((n-1)/2) over all participants including the
    collector. Average is planned exactly like Sum; the requester divides
    by the contributing-peer count afterwards.
    """
    if descriptor.operation not in SUPPORTED_OPERATIONS:
        raise UnsupportedOperation(f"operation {descriptor.operation!r} not supported")
    contributors = descriptor.contributing()
    if len(contributors) < min_contributors:
        raise GroupTooSmall(
            f"need >= {min_contributors} contributing peers, got {len(contributors)}")
    collectors = [p for p in descriptor.participants if not p.contributes]
    if len(collectors) != 1:
        raise ValueError(f"expected exactly one collector participant, got {len(collectors)}")

    ordered = sorted(descriptor.participants, key=lambda p: p.fingerprint)
    indexed = tuple(p.with_index(i) for i, p in enumerate(ordered, start=1))
    n = len(indexed)
    t = default_threshold(n) if threshold is None else threshold
    if not 1 <= t < n:
        raise ValueError(f"threshold {t} invalid for {n} participants")
    return RoundPlan(
        session_id=descriptor.session_id,
        attempt=descriptor.attempt,
        operation=descriptor.operation,
        data_type=descriptor.data_type,
        participants=indexed,
        threshold=t,
        channel_wait_ms=channel_wait_ms,
        collector=collectors[0].fingerprint,
    )


# --- engine ---------------------------------------------------------------------

class SumEngine:
    """State machine for one participant of one session attempt.

    ``step`` returns the messages to transmit plus the reconstructed result
    (collector only, once). Self-addressed messages appear in the outbound
    list and must be looped back by the caller.
    """

    def __init__(self, plan: RoundPlan, my_fingerprint: str, rng: random.Random,
                 prime: int = PRIME):
        me = plan.by_fingerprint(my_fingerprint)
        if me is None:
            raise UnknownSender(f"{my_fingerprint[:16]} is not in the plan")
        self.plan = plan
        self.me = me
        self.rng = rng
        self.prime = prime
        self.current_round = ROUND_DISTRIBUTE
        self.channels_ready = False
        self.my_input: int | None = None
        self.input_seen = False
        self.distribute_sent = False
        # per communication round: sender fingerprint -> Share
        self.received: dict[int, dict[str, Share]] = {ROUND_DISTRIBUTE: {}, ROUND_REVEAL: {}}
        self.buffered: list[RoundMessage] = []
        self.local_sum_share: Share | None = None
        self.result: int | None = None
        self.done = False
        self._result_emitted = False

    # -- public surface

    def step(self, event) -> tuple[list[Outbound], int | None]:
        """Apply one event; returns (outbound messages, result or None)."""
        if isinstance(event, LocalInput):
            self._on_input(event)
        elif isinstance(event, ChannelsReady):
            self.channels_ready = True
        elif isinstance(event, RoundMessage):
            self._on_message(event)
        else:
            raise TypeError(f"unknown engine event {event!r}")
        out = self._advance()
        result = None
        if self.result is not None and not self._result_emitted:
            self._result_emitted = True
            result = self.result
        return out, result

    def holds_result(self) -> bool:
        return self.result is not None

    # -- event handling

    def _on_input(self, event: LocalInput) -> None:
        if not self.me.contributes:
            raise ProtocolViolation("participant without input received a local value")
        if self.input_seen:
            raise DuplicateMessage("local input supplied twice")
        self.my_input = check_element(event.value, self.prime)
        self.input_seen = True

    def _on_message(self, msg: RoundMessage) -> None:
        sender = self.plan.by_fingerprint(msg.sender)
        if sender is None:
            raise UnknownSender(f"sender {msg.sender[:16]} is not in the plan")
        if msg.round == ROUND_DISTRIBUTE:
            if not sender.contributes:
                raise ProtocolViolation("distribute share from a non-contributing participant")
            if msg.share.index != self.me.share_index:
                raise ProtocolViolation(
                    f"distribute share for index {msg.share.index}, mine is {self.me.share_index}")
        elif msg.round == ROUND_REVEAL:
            if self.me.fingerprint != self.plan.collector:
                raise ProtocolViolation("reveal share sent to a non-collector")
            if msg.share.index != sender.share_index:
                raise ProtocolViolation("reveal share index does not match its sender")
        else:
            # rounds are 0 and 2 on the wire; aggregation is message-free
            raise OutOfOrderMessage(f"no messages exist for round {msg.round}")

        if msg.round < self.current_round:
            # late arrival for a completed round: only duplicates are possible
            if msg.sender in self.received[msg.round]:
                raise DuplicateMessage(f"second round-{msg.round} share from {msg.sender[:16]}")
            self.received[msg.round][msg.sender] = msg.share
            return
        if msg.round > self.current_round:
            # one communication round of buffering: reveals may overtake the
            # distribute barrier on slow nodes
            if any(b.sender == msg.sender and b.round == msg.round for b in self.buffered):
                raise DuplicateMessage(f"buffered duplicate from {msg.sender[:16]}")
            self.buffered.append(msg)
            return
        if msg.sender in self.received[msg.round]:
            raise DuplicateMessage(f"second round-{msg.round} share from {msg.sender[:16]}")
        self.received[msg.round][msg.sender] = msg.share

    # -- round progression

    def _advance(self) -> list[Outbound]:
        out: list[Outbound] = []
        progressed = True
        while progressed:
            progressed = False
            if self.current_round == ROUND_DISTRIBUTE:
                if self._maybe_send_distribute(out):
                    progressed = True
                if self._distribute_complete():
                    self._aggregate()
                    out.extend(self._send_reveal())
                    self._drain_buffer()
                    progressed = True
            elif self.current_round == ROUND_REVEAL and not self.done:
                if self._maybe_finish_reveal():
                    progressed = True
        return out

    def _maybe_send_distribute(self, out: list[Outbound]) -> bool:
        if self.distribute_sent or not self.channels_ready:
            return False
        if self.me.contributes and not self.input_seen:
            return False
        self.distribute_sent = True
        if not self.me.contributes:
            return True
        shares = share_secret(self.my_input, self.plan.n, self.plan.threshold,
                              self.rng, self.prime)
        by_index = {s.index: s for s in shares}
        for p in self.plan.participants:
            msg = RoundMessage(self.me.fingerprint, ROUND_DISTRIBUTE, by_index[p.share_index])
            out.append(Outbound(p.fingerprint, msg))
        return True

    def _distribute_complete(self) -> bool:
        if not self.distribute_sent:
            return False
        expected = {p.fingerprint for p in self.plan.contributors}
        return expected <= set(self.received[ROUND_DISTRIBUTE])

    def _aggregate(self) -> None:
        total = 0
        for share in self.received[ROUND_DISTRIBUTE].values():
            total = f_add(total, share.value, self.prime)
        self.local_sum_share = Share(self.me.share_index, total)
        self.current_round = ROUND_REVEAL

    def _send_reveal(self) -> list[Outbound]:
        msg = RoundMessage(self.me.fingerprint, ROUND_REVEAL, self.local_sum_share)
        if self.me.fingerprint == self.plan.collector:
            # self-delivery: collector records its own reveal share directly
            self.received[ROUND_REVEAL][self.me.fingerprint] = self.local_sum_share
            return []
        self.done = True
        return [Outbound(self.plan.collector, msg)]

    def _drain_buffer(self) -> None:
        pending, self.buffered = self.buffered, []
        for msg in pending:
            self._on_message(msg)

    def _maybe_finish_reveal(self) -> bool:
        if self.me.fingerprint != self.plan.collector:
            return False
        reveals = self.received[ROUND_REVEAL]
        if len(reveals) < self.plan.threshold + 1:
            return False
        shares = list(reveals.values())
        self.result = reconstruct(shares, self.plan.threshold, self.prime)
        self.done = True
        return True

    # -- introspection used by tests and the obliviousness checks

    def distribute_shares_held(self) -> dict[str, Share]:
        """Shares of individual inputs this node currently holds."""
        return dict(self.received[ROUND_DISTRIBUTE])
