"""Scenario configuration files.

Plain INI-style text, one ``key = value`` per line, in these sections::

    [arena]      width height comm_radius proximity_radius body_radius dt
                 speed dist_noise rot_noise seed
    [robots]     count placement(random|chain|grid) spacing detached
                 capabilities
    [lights]     positions intensities falloff relocate_at relocate_to
    [landmarks]  positions
    [protocol]   name(aggregation|street|feedback) + that protocol's keys
    [run]        ticks metrics cluster_every control

Lists of points are ``x y; x y``. ``capabilities`` is ``TAG:SPEC; ...``
where SPEC is a fraction of the robots (``ColorSensor:0.25``) or an
explicit id list (``ColorSensor:#2,5``). ``[landmarks] positions = auto``
puts landmarks at both ends of a chain.

Unknown sections or keys are errors. :func:`parse` fills in defaults and
:meth:`ScenarioConfig.to_text` writes the fully resolved file back out;
parsing that text yields an equal config.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from typing import Any, Callable

PLACEMENTS = ("random", "chain", "grid")
PROTOCOLS = ("aggregation", "street", "feedback")
METRICS = ("protocol", "clusters", "degree")


class ConfigError(ValueError):
    pass


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"not finite: {text}")
    return v


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def _ids(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in text.replace(";", " ").replace(",", " ").split())


def _points(text: str) -> tuple[tuple[float, float], ...] | str:
    if text.strip().lower() == "auto":
        return "auto"
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        xy = _floats(chunk)
        if len(xy) != 2:
            raise ValueError(f"point needs two coordinates: {chunk.strip()!r}")
        pts.append(xy)
    return tuple(pts)


def _point(text: str) -> tuple[float, float] | None:
    if text.strip().lower() in ("", "none"):
        return None
    xy = _floats(text)
    if len(xy) != 2:
        raise ValueError("point needs two coordinates")
    return xy


def _capabilities(text: str) -> tuple[tuple[str, Any], ...]:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        tag, _, spec = chunk.partition(":")
        tag, spec = tag.strip(), spec.strip()
        if not tag or not spec:
            raise ValueError(f"capability entry needs TAG:SPEC, got {chunk.strip()!r}")
        if spec.startswith("#"):
            out.append((tag, _ids(spec[1:])))
        else:
            frac = _float(spec)
            if not 0 <= frac <= 1:
                raise ValueError("capability fraction must lie in [0, 1]")
            out.append((tag, frac))
    return tuple(out)


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return t
    return parse


def _names(options: tuple[str, ...]) -> Callable[[str], tuple[str, ...]]:
    def parse(text: str) -> tuple[str, ...]:
        names = tuple(t.strip().lower() for t in text.replace(";", ",").split(",") if t.strip())
        bad = [n for n in names if n not in options]
        if bad:
            raise ValueError(f"unknown metric(s) {bad}; expected from {options}")
        return names
    return parse


# section -> key -> (parser, default as text)
SCHEMA: dict[str, dict[str, tuple[Callable, str]]] = {
    "arena": {
        "width": (_float, "1.2"),
        "height": (_float, "1.2"),
        "comm_radius": (_float, "0.25"),
        "proximity_radius": (_float, "0.05"),
        "body_radius": (_float, "0.0"),
        "dt": (_float, "0.1"),
        "speed": (_float, "0.1"),
        "dist_noise": (_float, "0.06"),
        "rot_noise": (_float, "0.11"),
        "seed": (_int, "0"),
    },
    "robots": {
        "count": (_int, "6"),
        "placement": (_choice(PLACEMENTS), "random"),
        "spacing": (_float, "0.9"),
        "detached": (_int, "0"),
        "capabilities": (_capabilities, ""),
    },
    "lights": {
        "positions": (_points, ""),
        "intensities": (_floats, ""),
        "falloff": (_float, "0.13"),
        "relocate_at": (_opt_int, "none"),
        "relocate_to": (_point, "none"),
    },
    "landmarks": {
        "positions": (_points, ""),
    },
    "run": {
        "ticks": (_int, "200"),
        "metrics": (_names(METRICS), "protocol, clusters, degree"),
        "cluster_every": (_int, "0"),
        "control": (_bool, "false"),
    },
}

PROTOCOL_SCHEMA: dict[str, dict[str, tuple[Callable, str]]] = {
    "aggregation": {
        "wait_gain": (_float, "2000.0"),
        "base_wait": (_int, "0"),
        "avoid_ticks": (_int, "3"),
        "turn_angle_range": (_float, repr(math.pi)),
        "wander_turn_prob": (_float, "0.1"),
        "wander_turn_range": (_float, repr(math.pi / 2)),
        "min_cluster_size": (_int, "3"),
    },
    "street": {
        "n_threshold": (_int, "15"),
        "resend_ticks": (_int, "3"),
        "send_timeout": (_int, "60"),
        "nav_ping_period": (_int, "10"),
        "cycles": (_int, "1"),
        "origins": (_ids, "0"),
        "navigators": (_ids, ""),
        "toward_terminus": (_bool, "true"),
    },
    "feedback": {
        "capability": (str.strip, "ColorSensor"),
        "min_responders": (_int, "2"),
        "request_timeout": (_int, "40"),
        "ledger_capacity": (_int, "32"),
        "search_speed": (_float, "0.0"),
        "scout": (_int, "0"),
        "found_at": (_int, "0"),
    },
}

SECTION_ORDER = ("arena", "robots", "lights", "landmarks", "protocol", "run")


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        if not value:
            return ""
        if all(isinstance(v, tuple) and len(v) == 2 and not isinstance(v[0], str) for v in value):
            return "; ".join(f"{_render(x)} {_render(y)}" for x, y in value)
        if all(isinstance(v, tuple) and isinstance(v[0], str) for v in value):
            parts = []
            for tag, spec in value:
                parts.append(f"{tag}:#" + ",".join(map(str, spec)) if isinstance(spec, tuple)
                             else f"{tag}:{_render(spec)}")
            return "; ".join(parts)
        if all(isinstance(v, str) for v in value):
            return ", ".join(value)
        return " ".join(_render(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ScenarioConfig:
    arena: dict
    robots: dict
    lights: dict
    landmarks: dict
    protocol: dict
    run: dict

    @property
    def protocol_name(self) -> str:
        return self.protocol["name"]

    def with_overrides(self, *, seed: int | None = None, count: int | None = None) -> ScenarioConfig:
        arena = dict(self.arena)
        robots = dict(self.robots)
        if seed is not None:
            arena["seed"] = seed
        if count is not None:
            robots["count"] = count
        out = ScenarioConfig(arena, robots, self.lights, self.landmarks, self.protocol, self.run)
        validate(out)
        return out

    def to_text(self) -> str:
        lines = []
        for section in SECTION_ORDER:
            values = getattr(self, section)
            lines.append(f"[{section}]")
            if section == "protocol":
                lines.append(f"name = {values['name']}")
                keys = PROTOCOL_SCHEMA[values["name"]]
            else:
                keys = SCHEMA[section]
            for key in keys:
                lines.append(f"{key} = {_render(values[key])}".rstrip())
            lines.append("")
        return "\n".join(lines)


def parse(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    unknown = [s for s in cp.sections() if s not in SECTION_ORDER]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if not cp.has_section("protocol") or "name" not in cp["protocol"]:
        raise ConfigError("[protocol] name is required")
    name = cp["protocol"]["name"].strip().lower()
    if name not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {name!r}; expected one of {', '.join(PROTOCOLS)}")

    resolved = {}
    for section in SECTION_ORDER:
        schema = PROTOCOL_SCHEMA[name] if section == "protocol" else SCHEMA[section]
        given = dict(cp[section]) if cp.has_section(section) else {}
        if section == "protocol":
            given.pop("name")
        extra = sorted(set(given) - set(schema))
        if extra:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(extra)}")
        values = {}
        for key, (parser, default) in schema.items():
            raw = given.get(key, default)
            try:
                values[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
        if section == "protocol":
            values = {"name": name, **values}
        resolved[section] = values
    cfg = ScenarioConfig(**resolved)
    validate(cfg)
    return cfg


def load(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse(text)


def validate(cfg: ScenarioConfig) -> None:
    try:
        arena_config(cfg)
    except ValueError as exc:
        raise ConfigError(f"[arena] {exc}") from exc
    r = cfg.robots
    n = r["count"]
    if not 1 <= n <= 64:
        raise ConfigError("[robots] count must lie in 1..64")
    if not 0 <= r["detached"] < n:
        raise ConfigError("[robots] detached must lie in 0..count-1")
    if r["spacing"] <= 0:
        raise ConfigError("[robots] spacing must be positive")
    for tag, spec in r["capabilities"]:
        if isinstance(spec, tuple) and any(not 0 <= i < n for i in spec):
            raise ConfigError(f"[robots] capability {tag} names a robot id outside 0..{n - 1}")
    lights = cfg.lights
    if lights["positions"] == "auto":
        raise ConfigError("[lights] positions cannot be auto")
    if len(lights["intensities"]) not in (0, len(lights["positions"])):
        raise ConfigError("[lights] intensities must match positions")
    if any(i < 0 for i in lights["intensities"]):
        raise ConfigError("[lights] intensities must be >= 0")
    if lights["falloff"] <= 0:
        raise ConfigError("[lights] falloff must be positive")
    if (lights["relocate_at"] is None) != (lights["relocate_to"] is None):
        raise ConfigError("[lights] relocate_at and relocate_to go together")
    if cfg.landmarks["positions"] == "auto" and r["placement"] != "chain":
        raise ConfigError("[landmarks] auto needs chain placement")
    run = cfg.run
    if run["ticks"] <= 0:
        raise ConfigError("[run] ticks must be positive")
    if run["cluster_every"] < 0:
        raise ConfigError("[run] cluster_every must be >= 0")
    p = cfg.protocol
    try:
        protocol_params(cfg)
    except ValueError as exc:
        raise ConfigError(f"[protocol] {exc}") from exc
    if p["name"] == "street":
        if not p["origins"]:
            raise ConfigError("[protocol] street needs at least one origin")
        ids = p["origins"] + p["navigators"]
        if any(not 0 <= i < n for i in ids) or len(set(ids)) != len(ids):
            raise ConfigError("[protocol] origins/navigators must be distinct ids in range")
    if p["name"] == "feedback" and not 0 <= p["scout"] < n:
        raise ConfigError("[protocol] scout id out of range")
    if p["name"] == "aggregation" and p["min_cluster_size"] < 1:
        raise ConfigError("[protocol] min_cluster_size must be >= 1")


def arena_config(cfg: ScenarioConfig):
    from .arena import ArenaConfig

    a = cfg.arena
    return ArenaConfig(width=a["width"], height=a["height"], comm_radius=a["comm_radius"],
                       proximity_radius=a["proximity_radius"], dt=a["dt"], speed=a["speed"],
                       dist_noise_frac=a["dist_noise"], rot_noise_frac=a["rot_noise"],
                       seed=a["seed"], body_radius=a["body_radius"])


def protocol_params(cfg: ScenarioConfig):
    from .proto_feedback import FeedbackParams
    from .proto_local import LocalParams
    from .proto_street import StreetParams

    p = cfg.protocol
    if p["name"] == "aggregation":
        return LocalParams(wait_gain=p["wait_gain"], base_wait=p["base_wait"],
                           avoid_ticks=p["avoid_ticks"], turn_angle_range=p["turn_angle_range"],
                           wander_turn_prob=p["wander_turn_prob"],
                           wander_turn_range=p["wander_turn_range"],
                           cruise_speed=cfg.arena["speed"])
    if p["name"] == "street":
        return StreetParams(n_threshold=p["n_threshold"], resend_ticks=p["resend_ticks"],
                            send_timeout=p["send_timeout"], nav_ping_period=p["nav_ping_period"],
                            cycles=p["cycles"])
    return FeedbackParams(capability=p["capability"], min_responders=p["min_responders"],
                          request_timeout=p["request_timeout"],
                          ledger_capacity=p["ledger_capacity"], search_speed=p["search_speed"])
