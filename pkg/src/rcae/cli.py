"""Command line entry point: ``rcae simulate | replay | compare``.

Exit codes: 0 success, 1 configuration error, 2 bad input data, 3 every
estimator failed numerically.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from . import io as _io
from .config import load_config
from .errors import ConfigError, MalformedRecordError
from .harness import STEADY_FRACTION, ScenarioConfig, replay_log, run_scenario, summary_table

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _estimator_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcae", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log estimator warnings")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the synthetic scenario and write the per-step CSV")
    sim.add_argument("--config", type=Path, help="key = value config file (defaults if omitted)")
    sim.add_argument("--out", type=Path, required=True, help="output CSV")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--duration", type=float, help="seconds")
    sim.add_argument("--dt", type=float, help="seconds")
    sim.add_argument("--estimators", type=_estimator_list, help="comma separated subset of rcae,mekf,dead_reckon")
    sim.add_argument("--log-out", type=Path, help="also export the synthetic IMU log for replay")

    rep = sub.add_parser("replay", help="run the estimators over a recorded IMU log")
    rep.add_argument("--log", type=Path, required=True, help="IMU log CSV")
    rep.add_argument("--config", type=Path)
    rep.add_argument("--out", type=Path, required=True)

    cmp_ = sub.add_parser("compare", help="run the reference scenario and write comparison tables")
    cmp_.add_argument("--out-dir", type=Path, required=True)
    cmp_.add_argument("--config", type=Path)
    return p


def _values(args) -> dict:
    values = load_config(args.config)
    for key in ("seed", "duration", "dt", "estimators"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def _finish(result) -> int:
    for name, row, msg in result.errors:
        print(f"warning: {name} failed at row {row}: {msg}", file=sys.stderr)
    return EXIT_NUMERIC if result.all_failed else EXIT_OK


def cmd_simulate(args) -> int:
    cfg = ScenarioConfig.from_values(_values(args))
    result = run_scenario(cfg, keep_log=args.log_out is not None)
    result.write_csv(args.out)
    if args.log_out is not None:
        _io.write_imu_log(args.log_out, result.log_records)
    return _finish(result)


def cmd_replay(args) -> int:
    values = _values(args)
    cfg = ScenarioConfig.from_values(values)
    records = _io.read_imu_log(args.log)
    result = replay_log(records, cfg.rcae, cfg.mekf, cfg.estimators)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    result.write_csv(args.out)
    return _finish(result)


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    cfg = ScenarioConfig.from_values(_values(args))
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(cfg)
    result.write_csv(out / "scenario.csv")
    for name in result.estimators:
        _io.write_table(out / f"{name}.csv", *result.estimator_table(name))
    table = summary_table(result)
    wall = time.perf_counter() - t0
    text = f"{table}# final {STEADY_FRACTION:.0%} of {len(result)} steps; wall time {wall:.3f} s\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return _finish(result)


COMMANDS = {"simulate": cmd_simulate, "replay": cmd_replay, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedRecordError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
