import itertools
import math
from dataclasses import replace

import pytest

from jasmine_swarm.arena import Envelope, Pose, RobotState, Vec2, World, run
from jasmine_swarm.experiments import StreetBenchParams, build_street_world
from jasmine_swarm.graph import bfs_distances, build_graph
from jasmine_swarm.proto_street import (FREE, MEMBER, ORIGIN, TERMINUS, BuildStreet,
                                        IncompleteRun, InsufficientGradient, NavigatorState,
                                        NavPing, Ok, Payload, StreetContext, StreetController,
                                        StreetParams, StreetState, navigation_direction,
                                        origin_state, street_metrics, street_step)

P = StreetParams()


def env(msg, sender=9, receiver=None):
    return Envelope(sender, receiver, msg)


def chain(n, **kw):
    w = build_street_world(n, 0, StreetBenchParams(StreetParams(**kw)))
    return w


# ---- pure transitions -----------------------------------------------------

def test_free_accepts_smallest_counter():
    res = street_step(StreetState(), P, [env(BuildStreet(3, 4, 0), 4), env(BuildStreet(2, 7, 0), 7)],
                      StreetContext(), 5)
    assert res.state.mode == MEMBER and res.state.counter == 3 and res.state.upstream == 7
    assert [o.msg for o in res.outgoing] == [BuildStreet(3, 5, 0)]


def test_threshold_makes_terminus():
    res = street_step(StreetState(), P, [env(BuildStreet(P.n_threshold + 1, 2, 0), 2)],
                      StreetContext(), 5)
    assert res.state.mode == TERMINUS
    assert res.outgoing[0].msg == Ok(2, 0) and res.outgoing[0].to == 2


def test_at_threshold_still_member():
    res = street_step(StreetState(), P, [env(BuildStreet(P.n_threshold, 2, 0), 2)],
                      StreetContext(), 5)
    assert res.state.mode == MEMBER


@pytest.mark.parametrize("ctx", [StreetContext(near_landmark=True),
                                 StreetContext(neighbor_streets=frozenset({3}))])
def test_finishing_conditions(ctx):
    res = street_step(StreetState(), P, [env(BuildStreet(0, 0, 0), 0)], ctx, 1)
    assert res.state.mode == TERMINUS and res.events == [("terminus", 1)]


def test_own_street_neighbour_does_not_finish():
    ctx = StreetContext(neighbor_streets=frozenset({0}))
    res = street_step(StreetState(), P, [env(BuildStreet(0, 0, 0), 0)], ctx, 1)
    assert res.state.mode == MEMBER


def test_free_without_messages_stays_free():
    res = street_step(StreetState(), P, [], StreetContext(tick=1), 1)
    assert res.state.mode == FREE and res.outgoing == []


def test_member_stops_sending_when_next_accepts():
    s = StreetState(MEMBER, 2, 1, 0, sending=True)
    res = street_step(s, P, [env(BuildStreet(3, 3, 0), 3)], StreetContext(tick=1), 2)
    assert not res.state.sending


def test_member_resends_then_times_out():
    p = StreetParams(resend_ticks=2, send_timeout=5)
    s = StreetState(MEMBER, 1, 0, 0, sending=True)
    sent = []
    for t in range(1, 8):
        res = street_step(s, p, [], StreetContext(tick=t), 1)
        s = res.state
        sent.append(any(isinstance(o.msg, BuildStreet) for o in res.outgoing))
        if ("send_timeout", 1) in res.events:
            break
    assert sent[:4] == [False, True, False, True]
    assert not s.sending and t == 5


def test_ok_relays_upstream():
    s = StreetState(MEMBER, 2, 1, 0, sending=True)
    res = street_step(s, P, [env(Ok(2, 0), 3, 2)], StreetContext(tick=1), 2)
    assert res.state.acked and not res.state.sending
    assert res.outgoing[0].msg == Ok(1, 0) and res.outgoing[0].to == 1


def test_ok_for_someone_else_ignored():
    s = StreetState(MEMBER, 2, 1, 0, sending=True)
    res = street_step(s, P, [env(Ok(5, 0), 3, 5)], StreetContext(tick=1), 2)
    assert not res.state.acked


def test_member_meeting_other_street_becomes_terminus():
    s = StreetState(MEMBER, 2, 1, 0, sending=True)
    res = street_step(s, P, [env(BuildStreet(4, 8, 9), 8)], StreetContext(tick=1), 2)
    assert res.state.mode == TERMINUS
    assert ("terminus_meet", 2) in res.events
    assert any(o.msg == Ok(1, 0) for o in res.outgoing)


def test_origin_injects_once():
    s = origin_state(0)
    res = street_step(s, P, [], StreetContext(tick=1), 0)
    assert res.events == [("inject", 0)] and res.state.mode == ORIGIN
    res = street_step(res.state, P, [], StreetContext(tick=2), 0)
    assert ("inject", 0) not in res.events


def test_unknown_messages_counted():
    res = street_step(StreetState(), P, [env("junk")], StreetContext(tick=1), 1)
    assert res.dropped == 1


def test_nav_ping_period():
    s = StreetState(MEMBER, 2, 1, 0)
    pings = [t for t in range(1, 31)
             if any(isinstance(o.msg, NavPing) for o in street_step(s, P, [], StreetContext(tick=t), 2).outgoing)]
    assert pings == [10, 20, 30]


# ---- world runs -----------------------------------------------------------

def test_six_chain_counters_and_rounds():
    w = chain(6)
    oracle = bfs_distances(build_graph(w.positions, w.config.comm_radius), 0)
    run(w, 40)
    assert [r.proto.counter for r in w.robots] == [0, 1, 2, 3, 4, 5]
    assert [r.proto.mode for r in w.robots] == [ORIGIN] + [MEMBER] * 4 + [TERMINUS]
    m = street_metrics(w.events)
    assert m["build_rounds"] == oracle[5] == 5
    assert m["ok_rounds"] == 5
    assert m["propagation_rounds"] == 5
    assert m["street_length"] == 6


def test_ok_relay_count():
    w = chain(6)
    run(w, 40)
    relays = [e for e in w.events if e[2] == "ok_relay" and e[3] >= 0]
    first_cycle = sorted(relays)[:4]
    assert [e[1] for e in first_cycle] == [4, 3, 2, 1]


@pytest.mark.parametrize("n", [2, 3, 10, 15])
def test_chains_complete(n):
    w = chain(n)
    run(w, 6 * n)
    m = street_metrics(w.events)
    assert m["build_rounds"] == n - 1
    assert m["propagation_rounds"] == n - 1
    assert m["street_length"] == n


def test_threshold_cuts_long_chain():
    w = chain(10, n_threshold=3)
    run(w, 40)
    term = [r.id for r in w.robots if r.proto.mode == TERMINUS]
    assert term == [5]
    assert all(r.proto.mode == FREE for r in w.robots[6:])


def test_two_streets_meet():
    w = chain(8)
    w.robots[7].proto = origin_state(7)
    run(w, 40)
    meets = sorted(e[:2] for e in w.events if e[2] == "terminus_meet")
    assert meets == [(4, 3), (4, 4)]
    assert [(r.proto.mode, r.proto.origin) for r in w.robots[3:5]] == [(TERMINUS, 0), (TERMINUS, 7)]
    assert [r.proto.counter for r in w.robots] == [0, 1, 2, 3, 3, 2, 1, 0]
    assert {e[1] for e in w.events if e[2] == "ok_origin"} == {0, 7}


def test_incomplete_run():
    w = chain(6)
    w.landmarks = []
    for r in w.robots[3:]:
        w.positions[r.id] = (w.config.width, 0.95)
    run(w, 5)
    with pytest.raises(IncompleteRun):
        street_metrics(w.events)
    with pytest.raises(IncompleteRun):
        street_metrics([])


def _with_navigator(toward):
    base = chain(6, nav_ping_period=2)
    robots = [RobotState(r.id, r.pose, proto=r.proto) for r in base.robots]
    x = float(base.positions[2, 0] + base.positions[3, 0]) / 2
    robots.append(RobotState(6, Pose(Vec2(x, 0.6)), proto=NavigatorState()))
    ctrl = StreetController(base.controller.params, toward_terminus=toward)
    return World(replace(base.config, speed=0.1), robots, landmarks=base.landmarks, controller=ctrl)


@pytest.mark.parametrize("toward", [True, False])
def test_navigator_follows_gradient(toward):
    w = _with_navigator(toward)
    x0 = w.positions[6, 0]
    run(w, 20)
    h = w.robots[6].proto.heading
    assert h is not None
    assert (math.cos(h) > 0) == toward
    assert (w.positions[6, 0] > x0) == toward


# ---- navigation -----------------------------------------------------------

SPOTS = {s: Vec2(math.cos(s), math.sin(s)) for s in range(3)}


def test_navigation_examples():
    pings = [NavPing(2, 0, 0), NavPing(3, 1, 0)]
    here = Vec2(0.0, 0.0)
    h = navigation_direction(pings, here, {0: Vec2(-1.0, 0.0), 1: Vec2(1.0, 0.0)})
    assert h == 0.0
    with pytest.raises(InsufficientGradient):
        navigation_direction([NavPing(2, 0, 0)], here, {0: Vec2(1, 0)})
    with pytest.raises(InsufficientGradient):
        navigation_direction([NavPing(4, 0, 0), NavPing(4, 1, 0)], here,
                             {0: Vec2(1, 0), 1: Vec2(0, 1)})


def test_navigation_exhaustive():
    here = Vec2(0.0, 0.0)
    for size in range(1, 4):
        for counters in itertools.product(range(6), repeat=size):
            pings = [NavPing(c, s, 0) for s, c in enumerate(counters)]
            if len(set(counters)) < 2:
                with pytest.raises(InsufficientGradient):
                    navigation_direction(pings, here, SPOTS)
                continue
            top = max(counters)
            winner = counters.index(top)
            expect = math.atan2(SPOTS[winner].y, SPOTS[winner].x) % (2 * math.pi)
            assert navigation_direction(pings, here, SPOTS) == pytest.approx(expect)
            low = counters.index(min(counters))
            back = math.atan2(SPOTS[low].y, SPOTS[low].x) % (2 * math.pi)
            assert navigation_direction(pings, here, SPOTS, toward_terminus=False) == pytest.approx(back)


@pytest.mark.parametrize("kw", [dict(n_threshold=0), dict(resend_ticks=0), dict(cycles=-1)])
def test_params_validated(kw):
    with pytest.raises(ValueError):
        StreetParams(**kw)
