"""Command line front end: ``reskit <experiment> [--config F] [--set k=v] --out DIR``.

Exit codes: 0 success, 2 configuration problems (bad flags, bad config file,
missing or unreadable dataset), 3 numerical failures (divergence,
conditioning, integration blow-up).
"""

from __future__ import annotations

import argparse
import sys
import time

from ..errors import ConfigError, FormatError, ReskitError
from .config import CONFIG_TYPES, load_config
from .records import write_outputs
from .registry import EXPERIMENTS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reskit",
        description="Reservoir computing, recurrent kernels, and structured variants.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for kind, cls in CONFIG_TYPES.items():
        sp = sub.add_parser(kind, help=cls.__doc__.splitlines()[0].rstrip("."))
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="INI file; section [%s] (and [DEFAULT]) apply" % kind)
        sp.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="KEY=VALUE", help="override one config value")
        sp.add_argument("--out", required=True, metavar="DIR",
                        help="output directory (created if missing)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.experiment, args.config, args.overrides)
        t0 = time.perf_counter()
        rows, curves = EXPERIMENTS[args.experiment](cfg, args.out)
        write_outputs(args.out, args.experiment, cfg, rows, curves,
                      time.perf_counter() - t0)
    except (ConfigError, FormatError) as exc:
        print(f"reskit: config error: {exc}", file=sys.stderr)
        return 2
    except ReskitError as exc:
        print(f"reskit: numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
