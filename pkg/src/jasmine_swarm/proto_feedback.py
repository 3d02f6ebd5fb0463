"""Feedback connectivity: a scout floods a capability request, capable robots
answer along the reverse path, and the scout waits for a team only when
enough of them answered before its deadline.

Package ids in the relay ledgers: a request with sequence number ``k`` uses
``2k``, the matching engage broadcast ``2k + 1``; the ledger key is
``(pkg_id, scout_id)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .arena import STOP, Envelope, MotionCommand, Outgoing, World, normalize_angle
from .codec import RoutingLedger, ledger_insert

SEARCHING = "Searching"
REQUESTING = "Requesting"
WAITING = "Waiting"
TEAMED = "Teamed"

COLOR_SENSOR = "ColorSensor"
LIGHT_SENSOR = "LightSensor"
GENERIC = "Generic"

EVENT_COLUMNS = ("tick", "robot", "role", "event", "scout_id")


@dataclass(frozen=True)
class Request:
    capability: str
    scout_id: int
    hop: int
    req_id: int = 1


@dataclass(frozen=True)
class Feedback:
    responder_id: int
    scout_id: int
    req_id: int = 1


@dataclass(frozen=True)
class Engage:
    scout_id: int
    responders: frozenset
    req_id: int = 1


@dataclass(frozen=True)
class FeedbackParams:
    capability: str = COLOR_SENSOR
    min_responders: int = 2
    request_timeout: int = 40
    ledger_capacity: int = 32
    search_speed: float = 0.0

    def __post_init__(self) -> None:
        if self.min_responders < 1:
            raise ValueError("min_responders must be >= 1")
        if self.request_timeout < 1:
            raise ValueError("request_timeout must be >= 1")


@dataclass(frozen=True)
class ScoutState:
    mode: str = SEARCHING
    deadline: int | None = None
    responders: frozenset = frozenset()
    req_id: int = 0
    requested_at: int | None = None


@dataclass
class Step:
    state: object
    outgoing: list[Outgoing] = field(default_factory=list)
    motion: MotionCommand = STOP
    events: list[tuple[str, int]] = field(default_factory=list)


def scout_step(state: ScoutState, params: FeedbackParams, inbox: Sequence[Envelope],
               found_object: bool, now: int, me: int,
               nearby: frozenset = frozenset()) -> Step:
    """``nearby`` holds the ids currently within proximity radius."""
    if state.mode == SEARCHING:
        if not found_object:
            return Step(state, motion=MotionCommand(params.search_speed, 0.0))
        req = state.req_id + 1
        new = ScoutState(REQUESTING, now + params.request_timeout, frozenset(), req, now)
        return Step(new, [Outgoing(Request(params.capability, me, 0, req))],
                    events=[("request", me)])

    if state.mode == REQUESTING:
        got = {e.msg.responder_id for e in inbox
               if isinstance(e.msg, Feedback) and e.msg.scout_id == me
               and e.msg.req_id == state.req_id}
        events = [("feedback", r) for r in sorted(got - state.responders)]
        s = replace(state, responders=state.responders | got)
        if now < s.deadline:
            return Step(s, events=events)
        if len(s.responders) >= params.min_responders:
            s = replace(s, mode=WAITING)
            events.append(("engage", me))
            return Step(s, [Outgoing(Engage(me, s.responders, s.req_id))], events=events)
        events.append(("resume_search", me))
        return Step(replace(s, mode=SEARCHING, deadline=None), events=events)

    if state.mode == WAITING and state.responders <= nearby:
        return Step(replace(state, mode=TEAMED), events=[("teamed", me)])
    return Step(state)


@dataclass(frozen=True)
class RelayState:
    seen: RoutingLedger
    reverse_hop: dict = field(default_factory=dict)
    responded: frozenset = frozenset()
    engaged: int | None = None
    target: int | None = None
    drops: int = 0


def new_relay(capacity: int = 32) -> RelayState:
    return RelayState(RoutingLedger(capacity))


def relay_step(state: RelayState, inbox: Sequence[Envelope], me: int) -> Step:
    """Flood requests and engages once each; route feedback upstream.

    The returned state shares its ledger with ``state``.
    """
    out: list[Outgoing] = []
    events = []
    reverse = dict(state.reverse_hop)
    drops = state.drops
    for env in inbox:
        m = env.msg
        if isinstance(m, Request):
            _, new = ledger_insert(state.seen, 2 * m.req_id, m.scout_id)
            if new:
                reverse[m.scout_id] = env.sender
                out.append(Outgoing(Request(m.capability, m.scout_id, m.hop + 1, m.req_id)))
        elif isinstance(m, Engage):
            _, new = ledger_insert(state.seen, 2 * m.req_id + 1, m.scout_id)
            if new:
                out.append(Outgoing(m))
        elif isinstance(m, Feedback) and env.receiver == me:
            nxt = reverse.get(m.scout_id)
            if nxt is None:
                drops += 1
                events.append(("drop", m.scout_id))
            else:
                out.append(Outgoing(m, to=nxt))
    return Step(replace(state, reverse_hop=reverse, drops=drops), out, events=events)


def responder_step(state: RelayState, capabilities: frozenset, inbox: Sequence[Envelope],
                   me: int) -> Step:
    """Answer requests for a capability we have; follow an engage.

    Expects ``state.reverse_hop`` to already include this tick's requests,
    i.e. call after :func:`relay_step`.
    """
    out = []
    events = []
    responded = set(state.responded)
    engaged, target = state.engaged, state.target
    for env in inbox:
        m = env.msg
        if isinstance(m, Request) and m.capability in capabilities:
            key = (m.scout_id, m.req_id)
            if key not in responded and m.scout_id in state.reverse_hop:
                responded.add(key)
                out.append(Outgoing(Feedback(me, m.scout_id, m.req_id),
                                    to=state.reverse_hop[m.scout_id]))
                events.append(("feedback_sent", m.scout_id))
        elif isinstance(m, Engage) and me in m.responders and engaged is None:
            engaged = m.scout_id
            target = state.reverse_hop.get(m.scout_id)
            events.append(("engaged", m.scout_id))
    return Step(replace(state, responded=frozenset(responded), engaged=engaged, target=target),
                out, events=events)


class FeedbackController:
    """Scout plus relay/responder nodes.

    The scout finds the object at ``found_at``. Engaged responders walk the
    reverse path hop by hop: once within proximity radius of their current
    target they move on to that robot's own reverse hop, until the target is
    the scout. Robots that are walking themselves are never used as waypoints.
    """

    event_columns = EVENT_COLUMNS

    def __init__(self, params: FeedbackParams, found_at: int = 0) -> None:
        self.params = params
        self.found_at = found_at

    def begin_tick(self, world: World) -> None:
        pass

    def tick(self, world, robot, draws):
        if isinstance(robot.proto, ScoutState):
            prox = world.proximity_adjacency[robot.id]
            nearby = frozenset(prox.nonzero()[0].tolist())
            step = scout_step(robot.proto, self.params, robot.inbox,
                              world.clock == self.found_at, world.clock, robot.id, nearby)
            role = "scout"
        else:
            r = relay_step(robot.proto, robot.inbox, robot.id)
            step = responder_step(r.state, robot.capabilities, robot.inbox, robot.id)
            step.outgoing = r.outgoing + step.outgoing
            step.events = r.events + step.events
            step.motion = self._approach(world, robot.id, step)
            role = "responder" if self.params.capability in robot.capabilities else "relay"
        robot.proto = step.state
        for event, scout in step.events:
            world.log(robot.id, role, event, scout)
        return step.motion, step.outgoing

    def _approach(self, world: World, rid: int, step: Step) -> MotionCommand:
        st: RelayState = step.state
        if st.engaged is None or st.target is None:
            return STOP
        target = self._waypoint(world, st.target, st.engaged, rid)
        while world.proximity_adjacency[rid, target] and target != st.engaged:
            nxt = getattr(world.robots[target].proto, "reverse_hop", {}).get(st.engaged)
            if nxt is None or nxt == rid:
                break
            target = self._waypoint(world, nxt, st.engaged, rid)
        if target != st.target:
            step.state = replace(st, target=target)
        if target == st.engaged and world.proximity_adjacency[rid, target]:
            return STOP
        me, there = world.positions[rid], world.positions[target]
        heading = normalize_angle(math.atan2(there[1] - me[1], there[0] - me[0]))
        return MotionCommand(world.config.speed, heading - world.headings[rid])

    @staticmethod
    def _waypoint(world: World, target: int, scout: int, rid: int) -> int:
        """Skip past robots that are themselves walking to the scout."""
        seen = {rid}
        while target != scout and target not in seen:
            proto = world.robots[target].proto
            if getattr(proto, "engaged", None) != scout:
                break
            seen.add(target)
            nxt = proto.reverse_hop.get(scout)
            if nxt is None:
                break
            target = nxt
        return target


def feedback_outcome(events: Sequence[tuple], scout: int) -> dict:
    """Summarise a run: outcome, confirmed responders, feedback latency."""
    mine = [e for e in events if e[1] == scout and e[2] == "scout"]
    request = [e[0] for e in mine if e[3] == "request"]
    feedback = [e for e in mine if e[3] == "feedback"]
    outcome = "Pending"
    for e in mine:
        if e[3] == "teamed":
            outcome = "Teamed"
            break
        if e[3] == "resume_search":
            outcome = "ResumedSearch"
            break
    out = {"outcome": outcome, "responders_confirmed": len(feedback)}
    if request and feedback:
        out["feedback_latency_rounds"] = max(e[0] for e in feedback) - request[0]
    return out
