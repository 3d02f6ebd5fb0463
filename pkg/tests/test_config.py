import pytest

from jasmine_swarm.config import ConfigError, parse
from jasmine_swarm.scenario import build_world

STREET = """
[arena]
width = 2.0
height = 1.0
[robots]
count = 6
placement = chain
[landmarks]
positions = auto
[protocol]
name = street
"""


def test_defaults_resolved():
    cfg = parse("[protocol]\nname = aggregation\n")
    assert cfg.arena["comm_radius"] == 0.25
    assert cfg.robots["placement"] == "random"
    assert cfg.protocol["wait_gain"] == 2000.0
    assert cfg.run["metrics"] == ("protocol", "clusters", "degree")


def test_resolved_text_roundtrip():
    cfg = parse(STREET)
    again = parse(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


def test_capability_syntax_roundtrip():
    cfg = parse("[robots]\ncount = 8\ncapabilities = ColorSensor:#2,5; LightSensor:0.25\n"
                "[protocol]\nname = feedback\n")
    assert cfg.robots["capabilities"] == (("ColorSensor", (2, 5)), ("LightSensor", 0.25))
    assert parse(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", [
    "[protocol]\nname = flock\n",
    "[robots]\ncount = 3\n",
    "[arena]\ncomm_radius = 0.05\n[protocol]\nname = street\n",
    "[arena]\ncolour = red\n[protocol]\nname = street\n",
    "[extras]\nx = 1\n[protocol]\nname = street\n",
    "[protocol]\nname = street\nwait_gain = 3\n",
    "[robots]\ncount = 0\n[protocol]\nname = street\n",
    "[robots]\ncount = 65\n[protocol]\nname = street\n",
    "[robots]\nplacement = spiral\n[protocol]\nname = street\n",
    "[robots]\ncapabilities = ColorSensor\n[protocol]\nname = feedback\n",
    "[robots]\ncapabilities = ColorSensor:1.5\n[protocol]\nname = feedback\n",
    "[robots]\ncount = 3\ncapabilities = ColorSensor:#7\n[protocol]\nname = feedback\n",
    "[lights]\npositions = 0.5\n[protocol]\nname = aggregation\n",
    "[lights]\npositions = 0.5 0.5\nintensities = 1 2\n[protocol]\nname = aggregation\n",
    "[lights]\nrelocate_at = 10\n[protocol]\nname = aggregation\n",
    "[landmarks]\npositions = auto\n[protocol]\nname = street\n",
    "[run]\nticks = 0\n[protocol]\nname = street\n",
    "[run]\nmetrics = protocol, vibes\n[protocol]\nname = street\n",
    "[protocol]\nname = street\norigins = 9\n",
    "[protocol]\nname = feedback\nscout = 9\n",
    "[arena]\nseed = abc\n[protocol]\nname = street\n",
    "no section header\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse(text)


def test_overrides_revalidate():
    cfg = parse(STREET)
    assert cfg.with_overrides(seed=4).arena["seed"] == 4
    with pytest.raises(ConfigError):
        cfg.with_overrides(count=0)


def test_chain_world_layout():
    w = build_world(parse(STREET))
    assert w.n == 6
    gaps = [w.positions[i + 1, 0] - w.positions[i, 0] for i in range(5)]
    assert all(abs(g - 0.9 * 0.25) < 1e-12 for g in gaps)
    assert [l.as_tuple() for l in w.landmarks] == [tuple(w.positions[0]), tuple(w.positions[5])]


def test_placement_must_fit():
    cfg = parse(STREET.replace("count = 6", "count = 12"))
    with pytest.raises(ConfigError):
        build_world(cfg)


def test_capability_fraction_is_seeded():
    text = ("[robots]\ncount = 10\ncapabilities = ColorSensor:0.3\n"
            "[protocol]\nname = feedback\n")
    a = [r.capabilities for r in build_world(parse(text)).robots]
    b = [r.capabilities for r in build_world(parse(text)).robots]
    assert a == b
    assert sum("ColorSensor" in c for c in a) == 3
    assert "ColorSensor" not in a[0]
