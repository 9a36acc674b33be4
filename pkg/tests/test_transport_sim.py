"""Simulated network semantics: delivery, determinism, fault injection."""

from __future__ import annotations

import pytest

from smcnet.errors import FingerprintMismatch, HandshakeTimeout, Refused
from smcnet.identity import Identity
from smcnet.messages import make_frame
from smcnet.transport.sim import DropLink, FaultPlan, KillPeer, SimNet


def connect(net, a_name, b_name, port=100, purpose="test", expected=None, wait=50):
    """Open a channel a->b and return (client_end, server_end)."""
    ia = Identity.from_seed_string(a_name, a_name)
    ib = Identity.from_seed_string(b_name, b_name)
    hb = net.host(b_name)
    accepted = []
    hb.listen(port, identity=ib, on_channel=accepted.append)
    opened, errors = [], []
    net.host(a_name).open_channel(
        f"{b_name}:{port}", identity=ia, purpose=purpose,
        expected_fingerprint=expected or ib.fingerprint,
        on_open=opened.append, on_error=errors.append)
    net.run_for(wait)
    if errors:
        raise errors[0]
    assert opened and accepted
    return opened[0], accepted[0]


def hb_frame(sender, seq):
    return make_frame("heartbeat", sender=sender, body={"seq": seq})


class TestDelivery:
    def test_fifo_exactly_once(self):
        net = SimNet(seed=1)
        a, b = connect(net, "alpha", "beta")
        got = []
        b.on_frame = lambda ch, fr: got.append(fr["body"]["seq"])
        for i in range(20):
            a.send(hb_frame(a.local_fingerprint, i))
        net.run_for(100)
        assert got == list(range(20))

    def test_bidirectional(self):
        net = SimNet(seed=1)
        a, b = connect(net, "alpha", "beta")
        got_a, got_b = [], []
        a.on_frame = lambda ch, fr: got_a.append(fr["body"]["seq"])
        b.on_frame = lambda ch, fr: got_b.append(fr["body"]["seq"])
        a.send(hb_frame(a.local_fingerprint, 1))
        b.send(hb_frame(b.local_fingerprint, 2))
        net.run_for(50)
        assert got_a == [2] and got_b == [1]

    def test_close_notifies_remote_once(self):
        net = SimNet(seed=1)
        a, b = connect(net, "alpha", "beta")
        closed = []
        b.on_close = lambda ch, reason: closed.append(reason)
        a.close()
        net.run_for(50)
        assert closed == ["remote_closed"]
        assert not a.is_open and not b.is_open

    def test_clock_advances_with_latency(self):
        net = SimNet(seed=1, fault_plan=FaultPlan(link_latency_ms=5.0, per_frame_ms=1.0))
        a, b = connect(net, "alpha", "beta")
        stamps = []
        b.on_frame = lambda ch, fr: stamps.append(net.clock)
        t0 = net.clock
        a.send(hb_frame(a.local_fingerprint, 0))
        net.run_for(100)
        assert stamps and stamps[0] >= t0 + 6.0


class TestDial:
    def test_refused_when_not_listening(self):
        net = SimNet(seed=1)
        errors = []
        ia = Identity.from_seed_string("alpha", "alpha")
        net.host("beta")
        net.host("alpha").open_channel(
            "beta:9999", identity=ia, purpose="test", expected_fingerprint=None,
            on_open=lambda ch: pytest.fail("must not open"), on_error=errors.append)
        net.run_for(50)
        assert isinstance(errors[0], Refused)

    def test_fingerprint_mismatch(self):
        net = SimNet(seed=1)
        with pytest.raises(FingerprintMismatch):
            connect(net, "alpha", "beta", expected="00" * 32)

    def test_timeout_on_dropped_link(self):
        plan = FaultPlan(drop_links=[DropLink(a="alpha", b="beta", at_ms=0.0)])
        net = SimNet(seed=1, fault_plan=plan)
        with pytest.raises(HandshakeTimeout):
            connect(net, "alpha", "beta")

    def test_tofu_reports_remote_fingerprint(self):
        net = SimNet(seed=1)
        a, _ = connect(net, "alpha", "beta", expected=None)
        assert a.remote_fingerprint == Identity.from_seed_string("beta", "beta").fingerprint


class TestFaults:
    def test_drop_link_at_time(self):
        plan = FaultPlan(drop_links=[DropLink(a="alpha", b="beta", at_ms=1000.0)])
        net = SimNet(seed=1, fault_plan=plan)
        a, b = connect(net, "alpha", "beta")
        c, d = connect(net, "alpha", "gamma", port=101)
        got_b, got_d = [], []
        b.on_frame = lambda ch, fr: got_b.append(fr["body"]["seq"])
        d.on_frame = lambda ch, fr: got_d.append(fr["body"]["seq"])
        a.send(hb_frame(a.local_fingerprint, 1))
        c.send(hb_frame(c.local_fingerprint, 1))
        net.run_for(2000)
        a.send(hb_frame(a.local_fingerprint, 2))
        c.send(hb_frame(c.local_fingerprint, 2))
        net.run_for(2000)
        assert got_b == [1]          # second frame lost after the drop point
        assert got_d == [1, 2]       # other links unaffected

    def test_kill_peer_on_round_trigger(self):
        plan = FaultPlan(kill_peers=[KillPeer(peer="alpha", at_round=2)])
        net = SimNet(seed=1, fault_plan=plan)
        a, b = connect(net, "alpha", "beta")
        got = []
        b.on_frame = lambda ch, fr: got.append(fr["type"])
        a.send(make_frame("round_message", sender=a.local_fingerprint,
                          body={"round": 0, "share": {"index": 1, "value": "5"}}, session_id="s"))
        net.run_for(50)
        a.send(make_frame("round_message", sender=a.local_fingerprint,
                          body={"round": 2, "share": {"index": 1, "value": "5"}}, session_id="s"))
        a.send(hb_frame(a.local_fingerprint, 9))
        net.run_for(50)
        assert got == ["round_message"]  # the reveal triggered the kill; nothing after

    def test_single_frame_drop_rule(self):
        from smcnet.transport.sim import DropFrames
        ia_fp = Identity.from_seed_string("alpha", "alpha").fingerprint
        plan = FaultPlan(drop_frames=[DropFrames(frame_type="heartbeat", sender="alpha", count=1)])
        net = SimNet(seed=1, fault_plan=plan)
        a, b = connect(net, "alpha", "beta")
        got = []
        b.on_frame = lambda ch, fr: got.append(fr["body"]["seq"])
        for i in range(3):
            a.send(hb_frame(ia_fp, i))
        net.run_for(50)
        assert got == [1, 2]

    def test_duplicate_flag_duplicates_some_frames(self):
        net = SimNet(seed=3, fault_plan=FaultPlan(duplicate=True))
        a, b = connect(net, "alpha", "beta")
        got = []
        b.on_frame = lambda ch, fr: got.append(fr["body"]["seq"])
        for i in range(200):
            a.send(hb_frame(a.local_fingerprint, i))
        net.run_for(500)
        assert len(got) > 200
        assert set(got) == set(range(200))


class TestDeterminism:
    def _scripted_run(self, seed):
        net = SimNet(seed=seed, fault_plan=FaultPlan(latency_jitter_ms=0.5))
        a, b = connect(net, "alpha", "beta")
        b.on_frame = lambda ch, fr: b.send(hb_frame(b.local_fingerprint, -fr["body"]["seq"]))
        a.on_frame = lambda ch, fr: None
        for i in range(30):
            a.send(hb_frame(a.local_fingerprint, i))
        net.run_for(500)
        return [(e.sent_at, e.src, e.dst, e.payload, e.delivered) for e in net.transcript]

    def test_same_seed_same_transcript(self):
        assert self._scripted_run(7) == self._scripted_run(7)

    def test_different_seed_differs(self):
        assert self._scripted_run(7) != self._scripted_run(8)


class TestBroadcast:
    def test_datagrams_reach_all_listeners(self):
        net = SimNet(seed=1)
        got = {}
        for name in ("p1", "p2", "p3"):
            host = net.host(name)
            got[name] = []
            host.udp_listen(400, lambda payload, n=name: got[n].append(payload))
        net.host("gw").udp_send("*:400", b'{"hello": 1}')
        net.run_for(10)
        assert all(got[n] == [b'{"hello": 1}'] for n in got)

    def test_killed_host_receives_nothing(self):
        net = SimNet(seed=1)
        got = []
        net.host("p1").udp_listen(400, got.append)
        net.kill_host("p1")
        net.host("gw").udp_send("*:400", b"x")
        net.run_for(10)
        assert got == []
