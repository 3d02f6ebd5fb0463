"""Deterministic 2D arena: kinematics with odometry noise, light sensing,
proximity queries and radius-limited message delivery.

One call to :func:`step` is one tick:

1. every robot's controller consumes its inbox and returns a motion
   command plus outgoing messages,
2. motion is integrated with multiplicative uniform noise,
3. positions are clamped to the arena and headings reflected at walls; with
   ``body_radius > 0`` a move that would push a robot into another robot's
   body is cancelled (the turn still happens),
4. messages are delivered, from the post-motion positions, into the
   inboxes of receivers within ``comm_radius``; they are read next tick.

Robot poses live in the world's ``positions``/``headings`` arrays;
``RobotState.pose`` is a view onto them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Protocol, Sequence

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite vector ({self.x}, {self.y})")

    def distance_to(self, other: Vec2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def normalize_angle(theta: float) -> float:
    theta = theta % _kernels.TWO_PI
    return 0.0 if theta >= _kernels.TWO_PI else theta


@dataclass(frozen=True)
class Pose:
    position: Vec2
    heading: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))


@dataclass(frozen=True)
class ArenaConfig:
    width: float = 2.0
    height: float = 2.0
    comm_radius: float = 0.25
    proximity_radius: float = 0.05
    dt: float = 0.1
    speed: float = 0.1
    dist_noise_frac: float = 0.06
    rot_noise_frac: float = 0.11
    seed: int = 0
    body_radius: float = 0.0

    def __post_init__(self) -> None:
        if not self.width > 0 or not self.height > 0:
            raise ValueError("arena width and height must be positive")
        if not self.comm_radius > self.proximity_radius > 0:
            raise ValueError("need comm_radius > proximity_radius > 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        if not 0 <= self.body_radius < self.proximity_radius / 2:
            raise ValueError("body_radius must lie in [0, proximity_radius/2)")
        for name in ("dist_noise_frac", "rot_noise_frac"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")

    def noiseless(self) -> ArenaConfig:
        return replace(self, dist_noise_frac=0.0, rot_noise_frac=0.0)


@dataclass(frozen=True)
class LightSource:
    position: Vec2
    peak_intensity: float = 1.0
    falloff_radius: float = 0.5

    def __post_init__(self) -> None:
        if self.peak_intensity < 0:
            raise ValueError("peak_intensity must be >= 0")
        if not self.falloff_radius > 0:
            raise ValueError("falloff_radius must be positive")

    def intensity(self, p: Vec2) -> float:
        """Linear falloff to zero at ``falloff_radius``."""
        d = self.position.distance_to(p)
        return self.peak_intensity * max(0.0, 1.0 - d / self.falloff_radius)


@dataclass(frozen=True)
class MotionCommand:
    speed: float = 0.0
    turn: float = 0.0


STOP = MotionCommand()


@dataclass(frozen=True)
class Outgoing:
    """A message to send this tick; ``to=None`` broadcasts."""

    msg: Any
    to: int | None = None


@dataclass(frozen=True)
class Envelope:
    sender: int
    receiver: int | None
    msg: Any


class RobotState:
    def __init__(self, id: int, pose: Pose, capabilities: Iterable[str] = (),
                 proto: Any = None) -> None:
        if not 0 <= id <= 63:
            raise ValueError(f"robot id {id} outside the 6-bit address space")
        self.id = id
        self.capabilities = frozenset(capabilities)
        self.proto = proto
        self.inbox: list[Envelope] = []
        self._pose = pose
        self._world: World | None = None

    @property
    def pose(self) -> Pose:
        if self._world is None:
            return self._pose
        return self._world.pose(self.id)

    def __repr__(self) -> str:
        return f"RobotState(id={self.id}, pose={self.pose}, proto={self.proto!r})"


class Controller(Protocol):
    """Per-world protocol driver.

    ``tick`` may mutate ``robot.proto`` and append rows to ``world.events``.
    ``draws`` holds two uniform [0, 1) numbers reserved for the robot this
    tick.
    """

    event_columns: tuple[str, ...]

    def begin_tick(self, world: World) -> None: ...

    def tick(self, world: World, robot: RobotState,
             draws: np.ndarray) -> tuple[MotionCommand, list[Outgoing]]: ...


class IdleController:
    event_columns: tuple[str, ...] = ("tick", "robot", "event")

    def begin_tick(self, world: World) -> None:
        pass

    def tick(self, world, robot, draws):
        return STOP, []


DELIVERY_COLUMNS = ("tick", "sender", "receiver", "kind", "distance")


@dataclass
class World:
    config: ArenaConfig
    robots: list[RobotState]
    lights: list[LightSource] = field(default_factory=list)
    landmarks: list[Vec2] = field(default_factory=list)
    controller: Any = field(default_factory=IdleController)
    log_deliveries: bool = True
    clock: int = 0

    def __post_init__(self) -> None:
        ids = [r.id for r in self.robots]
        if ids != list(range(len(ids))):
            raise ValueError("robot ids must be 0..n-1 in order")
        self.rng = np.random.default_rng(self.config.seed)
        n = len(self.robots)
        self.positions = np.zeros((n, 2))
        self.headings = np.zeros(n)
        for r in self.robots:
            p = r.pose
            if not (0 <= p.position.x <= self.config.width and 0 <= p.position.y <= self.config.height):
                raise ValueError(f"robot {r.id} starts outside the arena")
            self.positions[r.id] = p.position.as_tuple()
            self.headings[r.id] = p.heading
            r._world = self
        self.events: list[tuple] = []
        self.deliveries: list[tuple] = []
        self._prox_adj: np.ndarray | None = None
        self._comm_adj: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.robots)

    def pose(self, robot_id: int) -> Pose:
        x, y = self.positions[robot_id]
        return Pose(Vec2(float(x), float(y)), float(self.headings[robot_id]))

    def position(self, robot_id: int) -> Vec2:
        x, y = self.positions[robot_id]
        return Vec2(float(x), float(y))

    # adjacency at the start of the current tick (pre-motion)
    @property
    def proximity_adjacency(self) -> np.ndarray:
        if self._prox_adj is None:
            self._prox_adj = _kernels.within_radius(self.positions, self.config.proximity_radius)
        return self._prox_adj

    @property
    def comm_adjacency(self) -> np.ndarray:
        if self._comm_adj is None:
            self._comm_adj = _kernels.within_radius(self.positions, self.config.comm_radius)
        return self._comm_adj

    def light_field(self) -> np.ndarray:
        pos, peak, fall = _light_arrays(self.lights)
        return _kernels.light_intensity(self.positions, pos, peak, fall)

    def log(self, *row) -> None:
        self.events.append((self.clock, *row))

    def inject(self, sender: int, msg: Any, to: int | None = None) -> None:
        """Deliver ``msg`` from ``sender`` as if sent during the previous tick."""
        self._deliver([(sender, Outgoing(msg, to))], self.comm_adjacency)

    def _deliver(self, outgoing: list[tuple[int, Outgoing]], adj: np.ndarray) -> None:
        for sender, out in outgoing:
            if out.to is None:
                receivers = np.flatnonzero(adj[sender]).tolist()
            elif 0 <= out.to < self.n and adj[sender, out.to]:
                receivers = [out.to]
            else:
                receivers = []
            for rcv in receivers:
                self.robots[rcv].inbox.append(Envelope(sender, out.to, out.msg))
                if self.log_deliveries:
                    d = math.hypot(*(self.positions[sender] - self.positions[rcv]))
                    self.deliveries.append((self.clock, sender, rcv, type(out.msg).__name__, d))


def _light_arrays(lights: Sequence[LightSource]):
    if not lights:
        return np.zeros((0, 2)), np.zeros(0), np.ones(0)
    return (np.array([l.position.as_tuple() for l in lights]),
            np.array([l.peak_intensity for l in lights]),
            np.array([l.falloff_radius for l in lights]))


def step(world: World) -> World:
    """Advance ``world`` by one tick in place and return it."""
    cfg = world.config
    n = world.n
    world._prox_adj = None
    world._comm_adj = None
    draws = world.rng.random((n, 2))
    noise = world.rng.uniform(-1.0, 1.0, (n, 2))

    world.controller.begin_tick(world)
    speed = np.zeros(n)
    turn = np.zeros(n)
    outgoing: list[tuple[int, Outgoing]] = []
    for robot in world.robots:
        cmd, out = world.controller.tick(world, robot, draws[robot.id])
        robot.inbox = []
        speed[robot.id] = cmd.speed
        turn[robot.id] = cmd.turn
        outgoing.extend((robot.id, o) for o in out)

    if n:
        world.positions, world.headings = _kernels.integrate_motion(
            world.positions, world.headings, speed, turn, noise[:, 0], noise[:, 1],
            cfg.dt, cfg.dist_noise_frac, cfg.rot_noise_frac, cfg.width, cfg.height,
            cfg.body_radius)
    world._prox_adj = None
    world._comm_adj = None
    if outgoing:
        world._deliver(outgoing, world.comm_adjacency)
    world.clock += 1
    return world


def run(world: World, ticks: int) -> World:
    for _ in range(ticks):
        step(world)
    return world


def sense_light(robot: RobotState, lights: Iterable[LightSource]) -> float:
    """Scalar light reading; carries no direction information."""
    p = robot.pose.position
    return sum(light.intensity(p) for light in lights)


def neighbors(world: World, robot_id: int, radius: float) -> set[int]:
    if not 0 <= robot_id < world.n:
        raise KeyError(f"unknown robot {robot_id}")
    if not radius > 0:
        raise ValueError("radius must be positive")
    adj = _kernels.within_radius(world.positions, float(radius))
    return set(np.flatnonzero(adj[robot_id]).tolist())
