"""Seeded experiment harness: aggregation density sweeps, street benchmarks,
feedback scenarios, the ln(n)/n model curve and a unimodality test.

Every (n, seed) cell is an independent world; the result table is sorted by
(scenario, n, seed, metric) so output never depends on execution order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import _kernels
from .arena import ArenaConfig, LightSource, Pose, RobotState, Vec2, World, run, step
from .graph import bfs_distances, build_graph, eccentricity
from .proto_feedback import (SEARCHING, TEAMED, FeedbackController, FeedbackParams,
                             ScoutState, feedback_outcome, new_relay)
from .proto_local import WANDERING, AggregationController, LocalParams
from .proto_street import (IncompleteRun, StreetController, StreetParams, StreetState,
                           origin_state, street_metrics)

AGGREGATION = "aggregation"
STREET = "street"
FEEDBACK = "feedback"
SCENARIOS = (AGGREGATION, STREET, FEEDBACK)

RESULT_HEADER = ("scenario", "n", "seed", "metric", "value")


class InvalidSpec(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    scenario: str
    n_values: tuple[int, ...]
    seeds: tuple[int, ...]
    ticks: int
    params: Any = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_values", tuple(self.n_values))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if self.scenario not in SCENARIOS:
            raise InvalidSpec(f"unknown scenario {self.scenario!r}")
        if not self.n_values or not self.seeds:
            raise InvalidSpec("n_values and seeds must be non-empty")
        if any(n < 1 for n in self.n_values):
            raise InvalidSpec("every n must be >= 1")
        if any(n > 64 for n in self.n_values):
            raise InvalidSpec("at most 64 robots fit the 6-bit address space")
        if self.ticks <= 0:
            raise InvalidSpec("ticks must be positive")


@dataclass(frozen=True)
class Row:
    scenario: str
    n: int
    seed: int
    metric: str
    value: float | int | str


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentResult:
    rows: list[Row] = field(default_factory=list)

    def sorted(self) -> ExperimentResult:
        return ExperimentResult(sorted(self.rows, key=lambda r: (r.scenario, r.n, r.seed, r.metric)))

    def values(self, metric: str, n: int | None = None) -> list:
        return [r.value for r in self.rows if r.metric == metric and (n is None or r.n == n)]

    def n_values(self) -> list[int]:
        return sorted({r.n for r in self.rows})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in self.sorted().rows:
            w.writerow((r.scenario, r.n, r.seed, r.metric, _fmt(r.value)))
        return buf.getvalue()

    def __add__(self, other: ExperimentResult) -> ExperimentResult:
        return ExperimentResult(self.rows + other.rows).sorted()


def capability_model(n: float) -> float:
    """ln(n)/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.log(n) / n


# --------------------------------------------------------------------------
# aggregation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregationParams:
    arena: ArenaConfig = ArenaConfig(width=1.2, height=1.2, comm_radius=0.25,
                                     proximity_radius=0.05, body_radius=0.018)
    local: LocalParams = LocalParams(wait_gain=2000.0, avoid_ticks=3)
    light_position: tuple[float, float] = (0.6, 0.6)
    peak_intensity: float = 1.0
    falloff_radius: float = 0.13
    min_cluster_size: int = 3
    relocate_at: int | None = None
    relocate_to: tuple[float, float] | None = None
    control: bool = True


def anchored_cluster_fraction(world: World, anchor: tuple[float, float], radius: float,
                              min_size: int = 3) -> float:
    """Share of the swarm in the largest proximity component that reaches
    within ``radius`` of ``anchor``; components below ``min_size`` don't
    count as clusters."""
    if world.n == 0:
        return 0.0
    labels = _kernels.component_labels(world.proximity_adjacency)
    sizes = np.bincount(labels, minlength=world.n)
    d = np.hypot(world.positions[:, 0] - anchor[0], world.positions[:, 1] - anchor[1])
    touching = np.unique(labels[d <= radius])
    best = max((int(sizes[k]) for k in touching if sizes[k] >= min_size), default=0)
    return best / world.n


def random_positions(n: int, cfg: ArenaConfig, rng: np.random.Generator,
                     min_sep: float = 0.0) -> np.ndarray:
    pts = np.zeros((n, 2))
    k = 0
    while k < n:
        p = rng.uniform((0.0, 0.0), (cfg.width, cfg.height))
        if k == 0 or np.min(np.hypot(*(pts[:k] - p).T)) > min_sep:
            pts[k] = p
            k += 1
    return pts


def build_aggregation_world(n: int, seed: int, params: AggregationParams,
                            light_on: bool = True) -> World:
    cfg = replace(params.arena, seed=seed)
    rng = np.random.default_rng([seed, 1])
    pts = random_positions(n, cfg, rng, 2.0 * cfg.body_radius)
    headings = rng.uniform(0.0, 2.0 * math.pi, n)
    robots = [RobotState(i, Pose(Vec2(*pts[i]), headings[i]), proto=WANDERING) for i in range(n)]
    light = LightSource(Vec2(*params.light_position),
                        params.peak_intensity if light_on else 0.0, params.falloff_radius)
    local = replace(params.local, cruise_speed=cfg.speed)
    return World(cfg, robots, [light], controller=AggregationController(local),
                 log_deliveries=False)


def run_aggregation_cell(n: int, seed: int, ticks: int, params: AggregationParams,
                         light_on: bool = True) -> float:
    """Mean anchored cluster fraction over the last quarter of the run.

    The anchor is wherever the light currently is (after any relocation),
    also when the light is switched off.
    """
    world = build_aggregation_world(n, seed, params, light_on)
    start = ticks - ticks // 4
    samples = []
    for t in range(ticks):
        if params.relocate_at is not None and t == params.relocate_at:
            old = world.lights[0]
            world.lights[0] = replace(old, position=Vec2(*params.relocate_to))
        step(world)
        if t >= start:
            pos = world.lights[0].position.as_tuple()
            samples.append(anchored_cluster_fraction(world, pos, params.falloff_radius,
                                                     params.min_cluster_size))
    return float(np.mean(samples))


def _aggregation_cell(args) -> list[Row]:
    n, seed, ticks, params = args
    rows = [Row(AGGREGATION, n, seed, "cluster_fraction",
                run_aggregation_cell(n, seed, ticks, params, True))]
    if params.control:
        rows.append(Row(AGGREGATION, n, seed, "control_fraction",
                        run_aggregation_cell(n, seed, ticks, params, False)))
    return rows


def _map(fn: Callable, cells: list, workers: int) -> list:
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def run_aggregation_sweep(spec: SweepSpec, workers: int = 1) -> ExperimentResult:
    if spec.scenario != AGGREGATION:
        raise InvalidSpec("not an aggregation spec")
    params = spec.params or AggregationParams()
    if params.relocate_at is not None and params.relocate_to is None:
        raise InvalidSpec("relocate_at needs relocate_to")
    cells = [(n, s, spec.ticks, params) for n in spec.n_values for s in spec.seeds]
    return ExperimentResult([r for rows in _map(_aggregation_cell, cells, workers)
                             for r in rows]).sorted()


# --------------------------------------------------------------------------
# street
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StreetBenchParams:
    street: StreetParams = StreetParams()
    comm_radius: float = 0.25
    spacing: float = 0.9
    noise: bool = False


def chain_positions(n: int, comm_radius: float, spacing: float, margin: float = 0.1):
    """Robots on a horizontal line, neighbours ``spacing * comm_radius`` apart."""
    gap = spacing * comm_radius
    width = 2 * margin + max(n - 1, 0) * gap
    return [(margin + i * gap, 0.5) for i in range(n)], width, 1.0


def build_street_world(n: int, seed: int, params: StreetBenchParams) -> World:
    pts, width, height = chain_positions(n, params.comm_radius, params.spacing)
    cfg = ArenaConfig(width=width, height=height, comm_radius=params.comm_radius,
                      proximity_radius=min(0.05, params.comm_radius / 4), speed=0.0, seed=seed)
    if not params.noise:
        cfg = cfg.noiseless()
    robots = [RobotState(i, Pose(Vec2(*p)), proto=origin_state(0) if i == 0 else StreetState())
              for i, p in enumerate(pts)]
    landmarks = [Vec2(*pts[0]), Vec2(*pts[-1])] if n > 1 else [Vec2(*pts[0])]
    return World(cfg, robots, landmarks=landmarks, controller=StreetController(params.street))


def run_street_cell(n: int, seed: int, ticks: int, params: StreetBenchParams) -> list[Row]:
    world = build_street_world(n, seed, params)
    oracle = bfs_distances(build_graph(world.positions, world.config.comm_radius), 0)
    run(world, ticks)
    try:
        m = street_metrics(world.events)
    except IncompleteRun:
        return [Row(STREET, n, seed, "failure", "IncompleteRun")]
    terminus = min((e for e in world.events if e[2] in ("terminus", "terminus_meet")),
                   key=lambda e: e[0])[1]
    m["bfs_distance"] = oracle.get(terminus, -1)
    return [Row(STREET, n, seed, k, v) for k, v in sorted(m.items())]


def _street_cell(args) -> list[Row]:
    return run_street_cell(*args)


def run_street_benchmark(spec: SweepSpec, workers: int = 1) -> ExperimentResult:
    if spec.scenario != STREET:
        raise InvalidSpec("not a street spec")
    params = spec.params or StreetBenchParams()
    cells = [(n, s, spec.ticks, params) for n in spec.n_values for s in spec.seeds]
    return ExperimentResult([r for rows in _map(_street_cell, cells, workers)
                             for r in rows]).sorted()


# --------------------------------------------------------------------------
# feedback
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FeedbackScenarioParams:
    """Static scenario: a chain from the scout at robot 0 plus, optionally,
    a detached group of ``detached`` robots out of radio range.

    ``capable`` robots carry the requested capability; they are drawn by seed
    from the connected part, or from the detached group when
    ``capable_in_detached`` is set. ``capable_ids`` overrides the draw.
    """

    feedback: FeedbackParams = FeedbackParams()
    capable: int = 2
    detached: int = 0
    capable_in_detached: bool = False
    capable_ids: tuple[int, ...] | None = None
    comm_radius: float = 0.25
    spacing: float = 0.9
    found_at: int = 0


def build_feedback_world(n: int, seed: int, params: FeedbackScenarioParams) -> World:
    if not 0 <= params.detached < n:
        raise InvalidSpec("detached group must leave the scout connected")
    connected = n - params.detached
    gap = params.spacing * params.comm_radius
    pts = [(0.1 + i * gap, 0.3) for i in range(connected)]
    pts += [(0.1 + i * gap, 0.3 + 3 * params.comm_radius) for i in range(params.detached)]
    width = 0.2 + max(connected - 1, params.detached - 1, 0) * gap
    height = 0.6 + 3 * params.comm_radius
    cfg = ArenaConfig(width=width, height=height, comm_radius=params.comm_radius,
                      proximity_radius=min(0.05, params.comm_radius / 4), seed=seed).noiseless()
    if params.capable_ids is not None:
        capable = set(params.capable_ids)
    else:
        pool = list(range(connected, n)) if params.capable_in_detached else list(range(1, connected))
        if params.capable > len(pool):
            raise InvalidSpec("more capable robots requested than eligible robots")
        rng = np.random.default_rng([seed, 2])
        capable = set(rng.choice(pool, size=params.capable, replace=False).tolist())
    if 0 in capable:
        raise InvalidSpec("the scout cannot be one of its own responders")
    cap = params.feedback.capability
    robots = [RobotState(i, Pose(Vec2(*p)), capabilities={cap} if i in capable else (),
                         proto=ScoutState() if i == 0 else new_relay(params.feedback.ledger_capacity))
              for i, p in enumerate(pts)]
    return World(cfg, robots, controller=FeedbackController(params.feedback, params.found_at))


def run_feedback_cell(n: int, seed: int, ticks: int, params: FeedbackScenarioParams) -> list[Row]:
    world = build_feedback_world(n, seed, params)
    graph = build_graph(world.positions, world.config.comm_radius)
    reach = bfs_distances(graph, 0)
    cap = params.feedback.capability
    reachable_capable = sum(1 for r in world.robots if cap in r.capabilities and r.id in reach)
    for _ in range(ticks):
        step(world)
        scout = world.robots[0].proto
        if scout.mode == TEAMED or (scout.mode == SEARCHING and scout.req_id > 0):
            break
    out = feedback_outcome(world.events, 0)
    out["reachable_capable"] = reachable_capable
    out["eccentricity"] = eccentricity(graph, 0)
    return [Row(FEEDBACK, n, seed, k, v) for k, v in sorted(out.items())]


def _feedback_cell(args) -> list[Row]:
    return run_feedback_cell(*args)


def run_feedback_scenario(spec: SweepSpec, workers: int = 1) -> ExperimentResult:
    if spec.scenario != FEEDBACK:
        raise InvalidSpec("not a feedback spec")
    params = spec.params or FeedbackScenarioParams()
    cells = [(n, s, spec.ticks, params) for n in spec.n_values for s in spec.seeds]
    return ExperimentResult([r for rows in _map(_feedback_cell, cells, workers)
                             for r in rows]).sorted()


RUNNERS = {
    AGGREGATION: run_aggregation_sweep,
    STREET: run_street_benchmark,
    FEEDBACK: run_feedback_scenario,
}


def run_sweep(spec: SweepSpec, workers: int = 1) -> ExperimentResult:
    return RUNNERS[spec.scenario](spec, workers)


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    if a.size < 2:
        return float(a.mean()) if a.size else 0.0, 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


def pooled_se(*groups: Sequence[float]) -> float:
    """Standard error of a difference of group means: sqrt(sum of SE^2)."""
    return math.sqrt(sum(mean_and_se(g)[1] ** 2 for g in groups))


def within_one_se(a: Sequence[float], b: Sequence[float]) -> bool:
    return abs(mean_and_se(a)[0] - mean_and_se(b)[0]) <= pooled_se(a, b)


def exceeds_by_one_se(a: Sequence[float], b: Sequence[float]) -> bool:
    return mean_and_se(a)[0] - mean_and_se(b)[0] > pooled_se(a, b)


@dataclass(frozen=True)
class UnimodalityVerdict:
    unimodal: bool
    peak_n: int
    means: tuple[float, ...]
    tolerance: float
    reason: str = ""


def unimodal_means(n_values: Sequence[int], means: Sequence[float],
                   tolerance: float = 0.0) -> UnimodalityVerdict:
    """Interior-maximum test on a curve sampled at increasing ``n_values``.

    The peak is the arg-max of ``means``. The curve is unimodal when the peak
    is neither the first nor the last sample, it rises from the first sample
    to the peak by more than ``tolerance``, no step before the peak drops by
    more than ``tolerance``, and no step after it rises by more than
    ``tolerance``.
    """
    m = list(means)
    k = int(np.argmax(m))
    partial = UnimodalityVerdict(False, n_values[k], tuple(m), tolerance)
    if k == 0 or k == len(m) - 1:
        return replace(partial, reason="maximum at the boundary")
    if m[k] - m[0] <= tolerance:
        return replace(partial, reason="no rise to the peak")
    if any(m[i + 1] < m[i] - tolerance for i in range(k)):
        return replace(partial, reason="dip before the peak")
    if any(m[i + 1] > m[i] + tolerance for i in range(k, len(m) - 1)):
        return replace(partial, reason="rise after the peak")
    return replace(partial, unimodal=True)


def unimodality_check(result: ExperimentResult, metric: str, min_n_values: int = 4,
                      min_seeds: int = 20) -> UnimodalityVerdict:
    """Apply :func:`unimodal_means` to the seed means of ``metric``; the
    tolerance is one pooled standard error (RMS of the per-n SEs)."""
    ns = sorted({r.n for r in result.rows if r.metric == metric})
    if len(ns) < min_n_values:
        raise InsufficientData(f"need >= {min_n_values} n values, have {len(ns)}")
    means, ses = [], []
    for n in ns:
        vals = [float(v) for v in result.values(metric, n)]
        if len(vals) < min_seeds:
            raise InsufficientData(f"n={n} has {len(vals)} seeds, need {min_seeds}")
        mu, se = mean_and_se(vals)
        means.append(mu)
        ses.append(se)
    tol = math.sqrt(float(np.mean(np.square(ses))))
    return unimodal_means(ns, means, tol)
