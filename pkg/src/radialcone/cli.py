"""Command line front end.

    radialcone check|run|mms|sweep --config <path> [--out <dir>] [--jobs <k>]

Exit codes: 0 success, 1 acceptance failure, 2 hypothesis failure,
3 blow-up suspected, 64 configuration error.  ``RADIALCONE_SEED`` is
reserved for future stochastic data families and is currently ignored.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import runner
from .config import RunConfig
from .errors import ConfigError


def _parser():
    p = argparse.ArgumentParser(prog="radialcone", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "check the theorem hypotheses for the configured model"),
        ("run", "evolve the configured data and write diagnostics"),
        ("mms", "run the manufactured-solution convergence study"),
        ("sweep", "run every point of the configured parameter grid"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="TOML configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides output.directory)")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for mms and sweep")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        out = args.out or cfg.output.directory
        if args.command == "check":
            code, rep = runner.execute_check(cfg)
            print(rep.render())
        elif args.command == "run":
            code, report = runner.execute_run(cfg, out)
            print(runner.summary_text(report, runner.kernels.BACKEND), end="")
        elif args.command == "mms":
            code, result = runner.execute_mms(cfg, out, jobs=args.jobs)
            print(result.render())
        else:
            code, rows = runner.execute_sweep(cfg, out, jobs=args.jobs)
            for row in rows:
                print(f"run {row['run']:3d}: {row['status']}"
                      + (f" ({row['error']})" if row.get("error") else ""))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
