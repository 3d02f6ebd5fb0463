import subprocess
import sys
from pathlib import Path

import pytest

from jasmine_swarm.cli import main, parse_int_list
from jasmine_swarm.codec import Packet, encode, frame_to_hex

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def metrics(path):
    lines = (path / "metrics.csv").read_text().splitlines()
    return dict(l.split(",", 1) for l in lines[1:])


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_street(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(CONFIGS / "street6.ini"), "--out", str(out), "--quiet"]) == 0
    assert metrics(out)["street_length"] == "6"
    for name in ("events.csv", "metrics.csv", "clusters.csv", "resolved_config"):
        assert (out / name).exists()
    assert (out / "clusters.csv").read_text().splitlines()[1] == "60,0,6,Main"


def test_run_is_byte_identical_and_resolved_config_reproduces(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    cfg = str(CONFIGS / "street6.ini")
    main(["run", "--config", cfg, "--out", str(a), "--quiet"])
    main(["run", "--config", cfg, "--out", str(b), "--quiet"])
    main(["run", "--config", str(a / "resolved_config"), "--out", str(c), "--quiet"])
    for name in ("events.csv", "metrics.csv", "clusters.csv", "resolved_config"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_seed_override(tmp_path):
    text = "[robots]\ncount = 8\n[protocol]\nname = aggregation\n[run]\nticks = 50\n"
    cfg = write(tmp_path, text)
    main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1", "--quiet"])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "2", "--quiet"])
    assert "seed = 1" in (tmp_path / "a" / "resolved_config").read_text()
    assert (tmp_path / "a" / "events.csv").read_bytes() != (tmp_path / "b" / "events.csv").read_bytes()


@pytest.mark.parametrize("text", ["[arena]\ncomm_radius = 0.05\n[protocol]\nname = street\n",
                                  "[protocol]\nname = flock\n"])
def test_run_config_errors(tmp_path, text, capsys):
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_run_missing_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 2


def test_run_incomplete_street(tmp_path):
    text = (CONFIGS / "street6.ini").read_text().replace("ticks = 60", "ticks = 2")
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o"),
                 "--quiet"]) == 3
    assert metrics(tmp_path / "o")["failure"] == "IncompleteRun"


def test_run_feedback(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(CONFIGS / "feedback.ini"), "--out", str(out), "--quiet"]) == 0
    assert metrics(out)["outcome"] == "Teamed"


def test_sweep_cross_product(tmp_path):
    text = "[protocol]\nname = aggregation\n[run]\nticks = 20\nmetrics = protocol\n"
    cfg = write(tmp_path, text)
    args = ["sweep", "--config", cfg, "--sweep-n", "5,10,15,20", "--sweep-seeds", "0-19", "--quiet"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    rows = a.decode().splitlines()[1:]
    cells = {tuple(r.split(",")[1:3]) for r in rows}
    assert len(cells) == 80


def test_sweep_failure_rows_and_exit(tmp_path):
    cfg = str(CONFIGS / "street6.ini")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--sweep-n", "4,30",
                 "--sweep-seeds", "0", "--quiet"]) == 0
    text = (tmp_path / "a" / "sweep.csv").read_text()
    assert "street,30,0,failure," in text and "street,4,0,street_length,4" in text
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--sweep-n", "30",
                 "--sweep-seeds", "0,1", "--quiet"]) == 3


@pytest.mark.parametrize("n_list", ["", ",", "x"])
def test_sweep_bad_n_list(tmp_path, n_list):
    assert main(["sweep", "--config", str(CONFIGS / "street6.ini"), "--out", str(tmp_path),
                 "--sweep-n", n_list]) == 2


def test_int_lists():
    assert parse_int_list("5,10, 15") == [5, 10, 15]
    assert parse_int_list("0-3,2,7") == [0, 1, 2, 3, 7]


def test_frame_tool(capsys):
    assert main(["frame", "encode", "0", "0", "0", "0"]) == 0
    assert capsys.readouterr().out.strip() == "00000000"
    assert main(["frame", "encode", "513", "9", "62", "77"]) == 0
    hexed = capsys.readouterr().out.strip()
    assert hexed == frame_to_hex(encode(Packet(513, 9, 62, 77)))
    assert main(["frame", "decode", hexed]) == 0
    assert capsys.readouterr().out.strip() == "pkg_id=513 sender=9 receiver=62 payload=77"


@pytest.mark.parametrize("bit", range(23))
def test_frame_decode_flipped_header(bit, capsys):
    word = int(frame_to_hex(encode(Packet(300, 17, 40, 200))), 16) ^ (1 << (30 - bit))
    assert main(["frame", "decode", f"{word:08x}"]) == 4
    assert "parity" in capsys.readouterr().err


@pytest.mark.parametrize("args,code", [(["encode", "1", "2", "3"], 2), (["encode", "1024", "0", "0", "0"], 2),
                                       (["encode", "a", "0", "0", "0"], 2), (["decode", "xyz"], 2),
                                       (["decode", "123"], 4), (["decode", "80000000"], 4)])
def test_frame_tool_errors(args, code):
    assert main(["frame"] + args) == code


def test_bad_usage_exits_2():
    assert main(["bogus"]) == 2
    assert main([]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "jasmine_swarm", "frame", "encode", "1", "0", "0", "0"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == frame_to_hex(encode(Packet(1, 0, 0, 0)))
