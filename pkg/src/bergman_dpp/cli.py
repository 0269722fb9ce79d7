"""Command line entry point: ``run``, ``validate``, ``list-functions``, ``version``."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, parse_config
from .statistics import registry

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"line 0: cannot read {path}: {exc}"]) from None
    return parse_config(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bergman-dpp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", help="override output_dir from the config")
    p_val = sub.add_parser("validate", help="check a config and report every error")
    p_val.add_argument("config")
    sub.add_parser("list-functions", help="list registered test functions")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "list-functions":
        for f in registry():
            print(f"{f.name}\tsupport_radius={f.support_radius:g}")
        return EXIT_OK
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.config}: ok")
        return EXIT_OK
    if args.output_dir:
        cfg.output_dir = args.output_dir
    from .runner import run
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
