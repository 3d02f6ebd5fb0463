"""Light-modulated aggregation without messages.

A robot wanders; when another robot enters its proximity radius it stops
for a time that grows with the light it senses, then turns away by a random
angle and resumes wandering. Clusters under the light come from robots
being re-stopped by newcomers before they get clear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .arena import STOP, MotionCommand, World


@dataclass(frozen=True)
class Wandering:
    pass


@dataclass(frozen=True)
class Waiting:
    remaining: int

    def __post_init__(self) -> None:
        if self.remaining <= 0:
            raise ValueError("Waiting needs remaining > 0")


@dataclass(frozen=True)
class Avoiding:
    remaining: int

    def __post_init__(self) -> None:
        if self.remaining <= 0:
            raise ValueError("Avoiding needs remaining > 0")


LocalState = Union[Wandering, Waiting, Avoiding]
WANDERING = Wandering()


@dataclass(frozen=True)
class LocalParams:
    wait_gain: float = 150.0
    base_wait: int = 0
    avoid_ticks: int = 8
    turn_angle_range: float = math.pi
    wander_turn_prob: float = 0.1
    wander_turn_range: float = math.pi / 2
    cruise_speed: float = 0.1

    def __post_init__(self) -> None:
        if not self.wait_gain > 0:
            raise ValueError("wait_gain must be positive")
        if self.base_wait < 0 or self.avoid_ticks < 1:
            raise ValueError("base_wait must be >= 0 and avoid_ticks >= 1")


def wait_time(params: LocalParams, intensity: float) -> int:
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    return params.base_wait + int(round(params.wait_gain * intensity))


def _avoid(params: LocalParams, u: float) -> tuple[LocalState, MotionCommand]:
    turn = (2.0 * u - 1.0) * params.turn_angle_range
    return Avoiding(params.avoid_ticks), MotionCommand(params.cruise_speed, turn)


def local_step(state: LocalState, params: LocalParams, encounter: bool, intensity: float,
               draws=(1.0, 0.5)) -> tuple[LocalState, MotionCommand]:
    """One transition. ``draws`` are two uniforms in [0, 1) for the random walk
    and avoidance turns; the default pair makes the step turn-free."""
    if isinstance(state, Waiting):
        if state.remaining > 1:
            return Waiting(state.remaining - 1), STOP
        return _avoid(params, draws[1])

    if isinstance(state, Avoiding):
        nxt = Avoiding(state.remaining - 1) if state.remaining > 1 else WANDERING
        return nxt, MotionCommand(params.cruise_speed, 0.0)

    if encounter:
        w = wait_time(params, intensity)
        if w > 0:
            return Waiting(w), STOP
        return _avoid(params, draws[1])

    turn = 0.0
    if draws[0] < params.wander_turn_prob:
        turn = (2.0 * draws[1] - 1.0) * params.wander_turn_range
    return WANDERING, MotionCommand(params.cruise_speed, turn)


class AggregationController:
    """Runs :func:`local_step` for every robot; emits no messages."""

    event_columns = ("tick", "robot", "event", "ticks")

    def __init__(self, params: LocalParams, log_events: bool = False) -> None:
        self.params = params
        self.log_events = log_events
        self._encounter: np.ndarray | None = None
        self._intensity: np.ndarray | None = None

    def begin_tick(self, world: World) -> None:
        self._encounter = world.proximity_adjacency.any(axis=1)
        self._intensity = world.light_field()

    def tick(self, world, robot, draws):
        before = robot.proto
        state, cmd = local_step(before, self.params, bool(self._encounter[robot.id]),
                                float(self._intensity[robot.id]), draws)
        robot.proto = state
        if self.log_events and type(state) is not type(before):
            ticks = getattr(state, "remaining", 0)
            world.log(robot.id, type(state).__name__.lower(), ticks)
        return cmd, []
