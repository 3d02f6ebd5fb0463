"""``jasmine-swarm`` command line.

Exit codes: 0 ok, 2 bad config or malformed input, 3 incomplete protocol
run, 4 frame parity or length error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import codec
from .config import ConfigError, ScenarioConfig, load
from .experiments import ExperimentResult, Row
from .scenario import run_cell, run_scenario, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3
EXIT_FRAME = 4


class UsageError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"5,10,15"`` or ranges like ``"0-19"``; order kept, duplicates dropped."""
    out: list[int] = []
    for tok in text.replace(" ", "").split(","):
        if not tok:
            continue
        lo, sep, hi = tok.partition("-")
        try:
            vals = range(int(lo), int(hi) + 1) if sep and lo else [int(tok)]
        except ValueError as exc:
            raise UsageError(f"not an integer list: {text!r}") from exc
        out.extend(v for v in vals if v not in out)
    return out


def _err(msg: str) -> None:
    print(f"jasmine-swarm: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = load(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    out = run_scenario(cfg)
    write_outputs(cfg, out, Path(args.out))
    if not args.quiet:
        for k, v in out.metrics:
            print(f"{k}={v}")
    if out.incomplete:
        _err("protocol run did not complete")
        return EXIT_INCOMPLETE
    return EXIT_OK


def _cell(job: tuple[ScenarioConfig, int, int]) -> tuple[list[Row], bool]:
    cfg, n, seed = job
    try:
        return run_cell(cfg, n, seed)
    except ConfigError as exc:
        return [Row(cfg.protocol_name, n, seed, "failure", f"ConfigError: {exc}")], True


def cmd_sweep(args) -> int:
    cfg = load(args.config)
    n_list = parse_int_list(args.sweep_n or "")
    seeds = parse_int_list(args.sweep_seeds) if args.sweep_seeds else [cfg.arena["seed"]]
    if not n_list or not seeds:
        raise UsageError("sweep needs a non-empty --sweep-n and --sweep-seeds")
    jobs = [(cfg, n, s) for n in n_list for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]
    merged = ExperimentResult([r for rows, _ in results for r in rows])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text(merged.to_csv())
    (out_dir / "resolved_config").write_text(cfg.to_text())
    failed = sum(bad for _, bad in results)
    if not args.quiet:
        print(f"{len(jobs)} cells, {failed} failed -> {out_dir / 'sweep.csv'}")
    if failed == len(jobs):
        _err("every sweep cell failed")
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_frame(args) -> int:
    if args.mode == "encode":
        if len(args.fields) != 4:
            raise UsageError("encode takes four fields: pkg_id sender receiver payload")
        try:
            packet = codec.Packet(*(int(f, 10) for f in args.fields))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        print(codec.frame_to_hex(codec.encode(packet)))
        return EXIT_OK
    if len(args.fields) != 1:
        raise UsageError("decode takes one 8-digit hex frame")
    text = args.fields[0].strip().lower().removeprefix("0x")
    if not text or any(c not in "0123456789abcdef" for c in text):
        raise UsageError(f"not a hex frame: {args.fields[0]!r}")
    try:
        p = codec.decode(codec.frame_from_hex(text))
    except (codec.ParityError, codec.LengthError) as exc:
        _err(f"frame rejected: {exc}")
        return EXIT_FRAME
    print(f"pkg_id={p.pkg_id} sender={p.sender} receiver={p.receiver} payload={p.payload}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jasmine-swarm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario config file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--quiet", action="store_true")

    run = sub.add_parser("run", parents=[common], help="run one scenario")
    run.add_argument("--seed", type=int, help="override [arena] seed")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", parents=[common], help="robot count x seed cross product")
    sw.add_argument("--sweep-n", help="robot counts, e.g. 5,10,15 or 3-8")
    sw.add_argument("--sweep-seeds", help="seeds, e.g. 0-19")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    fr = sub.add_parser("frame", help="encode or decode a 31-bit frame")
    fr.add_argument("mode", choices=("encode", "decode"))
    fr.add_argument("fields", nargs="+")
    fr.set_defaults(func=cmd_frame)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
