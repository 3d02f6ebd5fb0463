"""Communication street: hop-counter flooding from a landmark, finishing
conditions, OK confirmation and gradient navigation.

A robot that accepts ``BuildStreet(n)`` joins the street with counter
``n + 1`` and keeps rebroadcasting ``BuildStreet(n + 1)`` until it overhears
the next robot accept (a ``BuildStreet(n + 2)``) or an ``Ok``. The street
ends at a robot that is near a landmark, next to another street, or whose
incoming counter exceeds the threshold; that terminus sends ``Ok`` back up
the chain. Each confirmed cycle lets the origin push a payload down the
street, which the terminus confirms with another ``Ok``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .arena import STOP, Envelope, MotionCommand, Outgoing, Vec2, World, normalize_angle

FREE = "Free"
ORIGIN = "Origin"
MEMBER = "Member"
TERMINUS = "Terminus"

EVENT_COLUMNS = ("tick", "robot", "event", "counter")


class IncompleteRun(RuntimeError):
    """A street run ended without any robot becoming a terminus."""


class InsufficientGradient(ValueError):
    pass


@dataclass(frozen=True)
class BuildStreet:
    n: int
    sender: int
    origin: int


@dataclass(frozen=True)
class Ok:
    to: int
    origin: int
    seq: int = 0


@dataclass(frozen=True)
class NavPing:
    n: int
    sender: int
    origin: int


@dataclass(frozen=True)
class Payload:
    seq: int
    n: int
    sender: int
    origin: int


@dataclass(frozen=True)
class StreetParams:
    n_threshold: int = 15
    resend_ticks: int = 3
    send_timeout: int = 60
    nav_ping_period: int = 10
    cycles: int = 1

    def __post_init__(self) -> None:
        if self.n_threshold < 1:
            raise ValueError("n_threshold must be >= 1")
        if self.resend_ticks < 1 or self.send_timeout < 1 or self.nav_ping_period < 1:
            raise ValueError("resend_ticks, send_timeout and nav_ping_period must be >= 1")
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")


@dataclass(frozen=True)
class StreetState:
    mode: str = FREE
    counter: int = 0
    upstream: int | None = None
    origin: int | None = None
    acked: bool = False
    sending: bool = False
    send_age: int = 0
    started: bool = True
    last_payload: int = 0
    payloads_sent: int = 0

    @property
    def on_street(self) -> bool:
        return self.mode != FREE


def origin_state(robot_id: int) -> StreetState:
    """State of the robot that starts a street at its landmark."""
    return StreetState(mode=ORIGIN, counter=0, origin=robot_id, started=False)


@dataclass(frozen=True)
class StreetContext:
    tick: int = 0
    near_landmark: bool = False
    neighbor_streets: frozenset = frozenset()

    def near_other_street(self, origin: int) -> bool:
        return bool(self.neighbor_streets - {origin})


@dataclass
class StepResult:
    state: StreetState
    outgoing: list[Outgoing] = field(default_factory=list)
    motion: MotionCommand = STOP
    events: list[tuple[str, int]] = field(default_factory=list)
    dropped: int = 0


_KNOWN = (BuildStreet, Ok, NavPing, Payload)


def street_step(state: StreetState, params: StreetParams, inbox: Sequence[Envelope],
                ctx: StreetContext, me: int) -> StepResult:
    """One street transition for robot ``me``. Pure: returns a new state."""
    res = StepResult(state)
    msgs = []
    for env in inbox:
        if isinstance(env.msg, _KNOWN):
            msgs.append(env.msg)
        else:
            res.dropped += 1
    builds = [m for m in msgs if isinstance(m, BuildStreet)]

    if state.mode == FREE:
        if builds:
            _accept(res, params, ctx, me, min(builds, key=lambda m: (m.n, m.sender)))
        return res

    s = state
    fresh = s.mode == ORIGIN and not s.started
    if fresh:
        s = replace(s, started=True, sending=True, send_age=0)
        res.outgoing.append(Outgoing(BuildStreet(0, me, me)))
        res.events.append(("inject", 0))

    if s.mode == MEMBER and any(b.origin != s.origin for b in builds):
        s = replace(s, mode=TERMINUS, sending=False)
        res.outgoing.append(Outgoing(Ok(s.upstream, s.origin), to=s.upstream))
        res.events.append(("terminus_meet", s.counter))

    if s.sending and any(b.origin == s.origin and b.n == s.counter + 1 for b in builds):
        s = replace(s, sending=False)

    for m in msgs:
        if isinstance(m, Ok) and m.to == me:
            s = replace(s, acked=True, sending=False)
            if s.mode == MEMBER:
                res.outgoing.append(Outgoing(Ok(s.upstream, s.origin, m.seq), to=s.upstream))
                res.events.append(("ok_relay", s.counter))
            elif s.mode == ORIGIN:
                res.events.append(("ok_origin", m.seq))
                if s.payloads_sent < params.cycles and m.seq == s.payloads_sent:
                    seq = s.payloads_sent + 1
                    s = replace(s, payloads_sent=seq)
                    res.outgoing.append(Outgoing(Payload(seq, 0, me, me)))
                    res.events.append(("payload_sent", seq))
        elif isinstance(m, Payload) and m.origin == s.origin and m.n == s.counter - 1 \
                and m.seq > s.last_payload:
            s = replace(s, last_payload=m.seq)
            if s.mode == MEMBER:
                res.outgoing.append(Outgoing(Payload(m.seq, s.counter, me, s.origin)))
                res.events.append(("payload_relay", m.seq))
            elif s.mode == TERMINUS:
                res.outgoing.append(Outgoing(Ok(s.upstream, s.origin, m.seq), to=s.upstream))
                res.events.append(("payload_arrived", m.seq))

    if s.sending and not fresh:
        age = s.send_age + 1
        if age >= params.send_timeout:
            s = replace(s, sending=False, send_age=age)
            res.events.append(("send_timeout", s.counter))
        else:
            s = replace(s, send_age=age)
            if age % params.resend_ticks == 0:
                res.outgoing.append(Outgoing(BuildStreet(s.counter, me, s.origin)))

    if ctx.tick % params.nav_ping_period == 0:
        res.outgoing.append(Outgoing(NavPing(s.counter, me, s.origin)))

    res.state = s
    return res


def _accept(res: StepResult, params: StreetParams, ctx: StreetContext, me: int,
            msg: BuildStreet) -> None:
    counter = msg.n + 1
    if ctx.near_landmark or ctx.near_other_street(msg.origin) or msg.n > params.n_threshold:
        res.state = StreetState(mode=TERMINUS, counter=counter, upstream=msg.sender,
                                origin=msg.origin)
        res.outgoing.append(Outgoing(Ok(msg.sender, msg.origin), to=msg.sender))
        res.events.append(("terminus", counter))
    else:
        res.state = StreetState(mode=MEMBER, counter=counter, upstream=msg.sender,
                                origin=msg.origin, sending=True)
        res.outgoing.append(Outgoing(BuildStreet(counter, me, msg.origin)))
        res.events.append(("accept", counter))


# --------------------------------------------------------------------------
# navigation along the street
# --------------------------------------------------------------------------


def navigation_direction(pings: Sequence[NavPing], my_position: Vec2,
                         ping_positions: Mapping[int, Vec2],
                         toward_terminus: bool = True) -> float:
    """Heading toward the sender of the highest-counter ping.

    Ties go to the smallest sender id. With ``toward_terminus=False`` the
    lowest counter wins instead, i.e. the robot heads for the origin.
    """
    if len({p.n for p in pings}) < 2:
        raise InsufficientGradient("need pings with at least two distinct counters")
    sign = -1 if toward_terminus else 1
    best = min(pings, key=lambda p: (sign * p.n, p.sender))
    target = ping_positions[best.sender]
    return normalize_angle(math.atan2(target.y - my_position.y, target.x - my_position.x))


@dataclass(frozen=True)
class NavigatorState:
    heading: float | None = None


# --------------------------------------------------------------------------
# world driver
# --------------------------------------------------------------------------


class StreetController:
    """Drives street robots and navigators inside a :class:`World`.

    Free robots stay put unless ``free_speed`` is set, in which case they
    drive straight (walls reflect them) until recruited.
    """

    event_columns = EVENT_COLUMNS

    def __init__(self, params: StreetParams, free_speed: float = 0.0,
                 toward_terminus: bool = True) -> None:
        self.params = params
        self.free_speed = free_speed
        self.toward_terminus = toward_terminus
        self.dropped = 0
        self._streets: list[int | None] = []

    def begin_tick(self, world: World) -> None:
        self._streets = [r.proto.origin if isinstance(r.proto, StreetState) and r.proto.on_street
                         else None for r in world.robots]

    def _context(self, world: World, rid: int) -> StreetContext:
        pos = world.position(rid)
        near = any(pos.distance_to(l) <= world.config.proximity_radius for l in world.landmarks)
        nbrs = world.comm_adjacency[rid].nonzero()[0]
        streets = frozenset(self._streets[j] for j in nbrs if self._streets[j] is not None)
        return StreetContext(world.clock, near, streets)

    def tick(self, world, robot, draws):
        if isinstance(robot.proto, NavigatorState):
            return self._navigate(world, robot)
        res = street_step(robot.proto, self.params, robot.inbox,
                          self._context(world, robot.id), robot.id)
        robot.proto = res.state
        self.dropped += res.dropped
        for event, value in res.events:
            world.log(robot.id, event, value)
        motion = res.motion
        if res.state.mode == FREE and self.free_speed > 0:
            motion = MotionCommand(self.free_speed, 0.0)
        return motion, res.outgoing

    def _navigate(self, world, robot):
        pings = [e.msg for e in robot.inbox if isinstance(e.msg, NavPing)]
        state = robot.proto
        if pings:
            try:
                heading = navigation_direction(pings, world.position(robot.id),
                                               {p.sender: world.position(p.sender) for p in pings},
                                               self.toward_terminus)
            except InsufficientGradient:
                pass
            else:
                state = NavigatorState(heading)
                world.log(robot.id, "nav_heading", max(p.n for p in pings))
        robot.proto = state
        if state.heading is None:
            return STOP, []
        return MotionCommand(world.config.speed, state.heading - world.headings[robot.id]), []


def street_metrics(events: Iterable[tuple]) -> dict[str, int]:
    """Rounds and length of a completed street run from its event rows.

    ``build_rounds``: first injection to first terminus. ``ok_rounds``:
    first terminus to the origin's build confirmation. ``propagation_rounds``:
    first payload sent by the origin to its arrival at a terminus.
    ``street_length``: robots on the street, origin included.
    """
    rows = list(events)
    inject = [r[0] for r in rows if r[2] == "inject"]
    term = [r[0] for r in rows if r[2] in ("terminus", "terminus_meet")]
    if not inject or not term:
        raise IncompleteRun("no terminus formed")
    t0, t_term = min(inject), min(term)
    members = {r[1] for r in rows if r[2] in ("inject", "accept", "terminus")}
    out = {"build_rounds": t_term - t0, "street_length": len(members)}
    ok = [r[0] for r in rows if r[2] == "ok_origin" and r[3] == 0]
    if ok:
        out["ok_rounds"] = min(ok) - t_term
    sent = [r[0] for r in rows if r[2] == "payload_sent" and r[3] == 1]
    arrived = [r[0] for r in rows if r[2] == "payload_arrived" and r[3] == 1]
    if sent and arrived:
        out["propagation_rounds"] = min(arrived) - min(sent)
    return out
