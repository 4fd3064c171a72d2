"""Command line: ``csstokes run|check|describe``."""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .checks import format_table, run_suite
from .config import ConfigError, parse_config
from .io import read_checkpoint, write_checkpoint, write_manifest, write_timeseries
from .picard import SimulationAbort, run
from .presets import PRESETS
from .state import DescriptorError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_ABORT = 4
EXIT_IO = 5


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load_config(source: str | None):
    if source is None:
        return PRESETS["full_coupling"]()
    if source in PRESETS and not Path(source).exists():
        return PRESETS[source]()
    return parse_config(source)


def cmd_run(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = _now()
    result = run(config, out_dir=out)
    csv_path = write_timeseries(result.records, out / "timeseries.csv")
    ckpt = write_checkpoint(out / "checkpoint.npz", config, result.ensemble, result.fluid,
                            result.step, result.time, result.bound_integral)
    cfg_echo = out / "config.txt"
    cfg_echo.write_text(config.to_text())
    write_manifest(out / "manifest.json", config, __version__, start, _now(), [cfg_echo, csv_path, ckpt])
    print(f"{len(result.records)} records, t = {result.time:g}, output in {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    config = _load_config(args.config)
    if args.quick:
        config = config.replace(t_end=min(config.t_end, 10 * config.dt))
    rows, res = run_suite(config, refine=not args.no_refine, threshold=not args.no_threshold)
    print(format_table(rows))
    dt_star = res["dt_star"]
    if dt_star is not None:
        print(f"picard threshold dt*: {dt_star:g}" if np.isfinite(dt_star)
              else "picard threshold dt*: not reached in tested range")
    return EXIT_OK if all(r.passed is not False for r in rows) else EXIT_CHECK_FAILED


def cmd_describe(args) -> int:
    ck = read_checkpoint(args.checkpoint)
    ens, fluid, meta = ck["ensemble"], ck["fluid"], ck["meta"]
    speeds = np.linalg.norm(ens.velocities, axis=1)
    print(f"N: {ens.n}")
    print(f"t: {ck['time']:.17g}")
    print(f"step: {ck['step']}")
    print(f"grid_n: {fluid.grid.n}")
    print(f"box_length: {ens.box_length:.17g}")
    print(f"mode: {ck['config'].mode.value}")
    print(f"mass: {ens.total_mass:.17g}")
    print(f"max speed: {speeds.max():.17g}")
    print(f"fluid energy: {fluid.energy:.17g}")
    print(f"format: {meta['format']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csstokes", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a config file")
    r.add_argument("config", help=f"config file or preset name ({', '.join(PRESETS)})")
    r.add_argument("--out", default="run_out", help="output directory")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run the invariant suite and print a pass/fail table")
    c.add_argument("config", nargs="?", help="config file or preset name (default: full_coupling)")
    c.add_argument("--quick", action="store_true", help="stop after 10 steps")
    c.add_argument("--no-refine", action="store_true", help="skip the dt/2 energy refinement run")
    c.add_argument("--no-threshold", action="store_true", help="skip the Picard dt* search")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("describe", help="summarize a checkpoint")
    d.add_argument("checkpoint")
    d.set_defaults(func=cmd_describe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DescriptorError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
