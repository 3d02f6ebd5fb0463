"""Build and run a world from a :class:`ScenarioConfig` and write its CSVs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arena import LightSource, Pose, RobotState, Vec2, World, step
from .config import ConfigError, ScenarioConfig, arena_config, protocol_params
from .experiments import Row, anchored_cluster_fraction, random_positions
from .graph import build_graph, classify, components, eccentricity, mean_degree
from .proto_feedback import FeedbackController, ScoutState, feedback_outcome, new_relay
from .proto_local import WANDERING, AggregationController
from .proto_street import (IncompleteRun, NavigatorState, StreetController, StreetState,
                           origin_state, street_metrics)

MARGIN = 0.1


def _chain(cfg: ScenarioConfig, arena) -> list[tuple[float, float]]:
    n, detached = cfg.robots["count"], cfg.robots["detached"]
    gap = cfg.robots["spacing"] * arena.comm_radius
    connected = n - detached
    if detached:
        rows = [(MARGIN, connected), (MARGIN + 2 * arena.comm_radius, detached)]
    else:
        rows = [(arena.height / 2, connected)]
    pts = [(MARGIN + i * gap, y) for y, k in rows for i in range(k)]
    if any(x > arena.width or y > arena.height for x, y in pts):
        raise ConfigError("chain placement does not fit in the arena")
    return pts


def _grid(cfg: ScenarioConfig, arena) -> list[tuple[float, float]]:
    n = cfg.robots["count"]
    gap = cfg.robots["spacing"] * arena.comm_radius
    cols = math.ceil(math.sqrt(n))
    pts = [(MARGIN + (i % cols) * gap, MARGIN + (i // cols) * gap) for i in range(n)]
    if any(x > arena.width or y > arena.height for x, y in pts):
        raise ConfigError("grid placement does not fit in the arena")
    return pts


def _capabilities(cfg: ScenarioConfig, seed: int) -> list[set[str]]:
    n = cfg.robots["count"]
    caps: list[set[str]] = [set() for _ in range(n)]
    scout = cfg.protocol["scout"] if cfg.protocol_name == "feedback" else None
    eligible = [i for i in range(n) if i != scout]
    rng = np.random.default_rng([seed, 2])
    for tag, spec in cfg.robots["capabilities"]:
        if isinstance(spec, tuple):
            chosen = spec
        else:
            k = int(round(spec * len(eligible)))
            chosen = rng.choice(eligible, size=k, replace=False).tolist() if k else []
        for i in chosen:
            caps[i].add(tag)
    return caps


def build_world(cfg: ScenarioConfig, light_on: bool = True) -> World:
    arena = arena_config(cfg)
    seed = arena.seed
    n = cfg.robots["count"]
    placement = cfg.robots["placement"]
    if placement == "random":
        rng = np.random.default_rng([seed, 1])
        pts = [tuple(p) for p in random_positions(n, arena, rng, 2.0 * arena.body_radius)]
        headings = rng.uniform(0.0, 2.0 * math.pi, n).tolist()
    else:
        pts = _chain(cfg, arena) if placement == "chain" else _grid(cfg, arena)
        headings = [0.0] * n

    name = cfg.protocol_name
    params = protocol_params(cfg)
    p = cfg.protocol
    caps = _capabilities(cfg, seed)
    if name == "aggregation":
        states = [WANDERING] * n
        controller = AggregationController(params, log_events=True)
    elif name == "street":
        states = [origin_state(i) if i in p["origins"]
                  else NavigatorState() if i in p["navigators"] else StreetState()
                  for i in range(n)]
        controller = StreetController(params, toward_terminus=p["toward_terminus"])
    else:
        states = [ScoutState() if i == p["scout"] else new_relay(params.ledger_capacity)
                  for i in range(n)]
        controller = FeedbackController(params, p["found_at"])

    robots = [RobotState(i, Pose(Vec2(*pts[i]), headings[i]), caps[i], states[i])
              for i in range(n)]
    lc = cfg.lights
    intensities = lc["intensities"] or (1.0,) * len(lc["positions"])
    lights = [LightSource(Vec2(*pos), inten if light_on else 0.0, lc["falloff"])
              for pos, inten in zip(lc["positions"], intensities)]
    marks = cfg.landmarks["positions"]
    if marks == "auto":
        connected = n - cfg.robots["detached"]
        marks = (pts[0], pts[connected - 1])
    return World(arena, robots, lights, [Vec2(*m) for m in marks], controller)


@dataclass
class ScenarioOutput:
    event_columns: tuple[str, ...]
    events: list[tuple]
    metrics: list[tuple[str, object]]
    clusters: list[tuple]
    incomplete: bool = False
    deliveries: list[tuple] = field(default_factory=list)


def _anchor(cfg: ScenarioConfig, world: World) -> tuple[float, float]:
    if world.lights:
        return world.lights[0].position.as_tuple()
    return (world.config.width / 2, world.config.height / 2)


def _simulate(cfg: ScenarioConfig, light_on: bool = True):
    world = build_world(cfg, light_on)
    ticks = cfg.run["ticks"]
    every = cfg.run["cluster_every"]
    want_clusters = "clusters" in cfg.run["metrics"]
    agg = cfg.protocol_name == "aggregation"
    start = ticks - ticks // 4
    samples, clusters = [], []
    relocate_at = cfg.lights["relocate_at"]
    for t in range(ticks):
        if relocate_at is not None and t == relocate_at and world.lights:
            old = world.lights[0]
            world.lights[0] = LightSource(Vec2(*cfg.lights["relocate_to"]), old.peak_intensity,
                                          old.falloff_radius)
        step(world)
        if agg and t >= start:
            samples.append(anchored_cluster_fraction(world, _anchor(cfg, world), cfg.lights["falloff"],
                                                     cfg.protocol["min_cluster_size"]))
        if want_clusters and every and world.clock % every == 0 and world.clock != ticks:
            clusters.extend(_cluster_rows(world))
    if want_clusters:
        clusters.extend(_cluster_rows(world))
    return world, samples, clusters


def _cluster_rows(world: World) -> list[tuple]:
    g = build_graph(world.positions, world.config.comm_radius)
    return classify(components(g), g.n).rows(world.clock)


def run_scenario(cfg: ScenarioConfig) -> ScenarioOutput:
    world, samples, clusters = _simulate(cfg)
    metrics: list[tuple[str, object]] = []
    incomplete = False
    name = cfg.protocol_name
    if "protocol" in cfg.run["metrics"]:
        if name == "aggregation":
            metrics.append(("cluster_fraction", float(np.mean(samples))))
            metrics.append(("final_cluster_fraction", samples[-1]))
            if cfg.run["control"]:
                _, ctrl, _ = _simulate(cfg, light_on=False)
                metrics.append(("control_fraction", float(np.mean(ctrl))))
        elif name == "street":
            try:
                m = street_metrics(world.events)
            except IncompleteRun:
                incomplete = True
                metrics.append(("failure", "IncompleteRun"))
            else:
                metrics.extend(sorted(m.items()))
        else:
            scout = cfg.protocol["scout"]
            m = feedback_outcome(world.events, scout)
            g = build_graph(world.positions, world.config.comm_radius)
            metrics.extend(sorted(m.items()))
            metrics.append(("eccentricity", eccentricity(g, scout)))
            if m["outcome"] == "Pending":
                incomplete = True
                metrics.append(("failure", "Pending"))
    if "degree" in cfg.run["metrics"]:
        metrics.append(("mean_degree", mean_degree(build_graph(world.positions, world.config.comm_radius))))
    if "clusters" in cfg.run["metrics"]:
        g = build_graph(world.positions, world.config.comm_radius)
        metrics.append(("components", len(components(g))))
    return ScenarioOutput(world.controller.event_columns, world.events, metrics, clusters,
                          incomplete, world.deliveries)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_outputs(cfg: ScenarioConfig, out: ScenarioOutput, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "events.csv").write_text(_csv(out.event_columns, out.events))
    (out_dir / "metrics.csv").write_text(_csv(("metric", "value"), out.metrics))
    (out_dir / "clusters.csv").write_text(
        _csv(("tick", "component_index", "size", "label"), out.clusters))
    (out_dir / "resolved_config").write_text(cfg.to_text())


def run_cell(cfg: ScenarioConfig, n: int, seed: int) -> tuple[list[Row], bool]:
    """Metrics of one sweep cell as result rows; second item flags failure."""
    cell = cfg.with_overrides(seed=seed, count=n)
    out = run_scenario(cell)
    rows = [Row(cfg.protocol_name, n, seed, k, v) for k, v in out.metrics]
    return rows, out.incomplete
