"""Command-line entry point: run one experiment battery against a config."""

import argparse
import sys

from .config import ConfigError, build_config, parse_config
from .suites import run_suite

_SUBCOMMANDS = {
    "verify-calculus": "calculus",
    "study-energy": "energy",
    "solve": "scheme",
    "study-convergence": "convergence",
    "check-reversibility": "reversibility",
}

_DEFAULT_CONFIG = {"grid": {"d": 1, "N_ax": 128}, "ek": {}}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ekpara",
        description="Paradifferential Euler-Korteweg experiment batteries")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, suite in _SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {suite} battery")
        sp.add_argument("--config", help="JSON config path "
                        "(defaults if omitted)")
        sp.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        if args.config:
            cfg = parse_config(args.config)
        else:
            cfg = build_config(dict(_DEFAULT_CONFIG))
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    cfg.out_dir = args.out
    status, results = run_suite(cfg, _SUBCOMMANDS[args.command])
    if status != 0:
        failing = ", ".join(r.name for r in results if not r.passed)
        print(f"FAILED: {failing}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
