"""Command line entry point.

Exit status: 0 on success, 2 when a configured bound is violated, 1 on an
operational error (bad flags, unreadable config, invalid parameters, solver
failure).  ``STDGLAB_OUTPUT_DIR`` and ``STDGLAB_WORKERS`` override the
output directory and the worker count.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, finest_solution, run_experiment
from .fem import SolverError

log = logging.getLogger("stdglab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stdglab", description="Space-time finite element experiments for the heat equation.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON configuration file (keys as in --dump-defaults)")
        p.add_argument("--output", help="output directory (overrides config and STDGLAB_OUTPUT_DIR)")
        p.add_argument("--levels", type=int, help="number of refinement levels to run")
        p.add_argument("--workers", type=int, help="concurrent levels (overrides STDGLAB_WORKERS)")
        p.add_argument("--dump-defaults", action="store_true", help="print the default configuration and exit")
        p.add_argument("--vtk", action="store_true", help="also write VTK snapshots of the finest level")
        p.add_argument("-v", "--verbose", action="store_true")
    p = sub.add_parser("check", help="fast exactness checks on a coarse mesh")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config, args.command)
    else:
        cfg = ExperimentConfig.defaults(args.command)
    if args.levels is not None:
        cfg = cfg.with_levels(args.levels)
    workers = args.workers if args.workers is not None else os.environ.get("STDGLAB_WORKERS")
    if workers is not None:
        try:
            cfg.workers = int(workers)
        except ValueError:
            raise ConfigError(f"worker count must be an integer, got {workers!r}") from None
        if cfg.workers < 1:
            raise ConfigError("worker count must be >= 1")
    cfg.output = args.output or os.environ.get("STDGLAB_OUTPUT_DIR") or cfg.output
    return cfg.validated()


def _run_check() -> int:
    from .checks import run_checks

    failed = 0
    for name, value, tol in run_checks():
        ok = value <= tol
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:36s} {value:.2e} (tol {tol:.0e})")
    return 2 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"stdglab: error: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "check":
        return _run_check()
    if args.dump_defaults:
        print(ExperimentConfig.defaults(args.command).to_json())
        return 0
    try:
        cfg = _config(args)
        start = time.perf_counter()
        report = run_experiment(cfg)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - start)
        paths = report.write(cfg.output)
        if args.vtk:
            snaps = finest_solution(cfg).write_vtk_snapshots(os.path.join(cfg.output, "vtk"))
            log.info("wrote %d VTK snapshots", len(snaps))
    except FileNotFoundError as exc:
        print(f"stdglab: error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, SolverError, ValueError, OSError) as exc:
        print(f"stdglab: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {paths['csv']} and {paths['json']}")
    if not report.passed:
        print(f"stdglab: {args.command}: a configured bound was violated; see {paths['json']}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
