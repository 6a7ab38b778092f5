"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric divergence.
"""
from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, DivergenceError, SparcError
from .config import load_config
from .runner import run_experiment, to_csv

COMMANDS = {
    "simulate-channel": "channel",
    "simulate-sc": "sc-channel",
    "simulate-bc": "bc",
    "simulate-mac": "mac",
    "compress": "compress",
    "se": "se",
    "alloc": "alloc",
    "wz-demo": "wz",
    "gp-demo": "gp",
}

HELP = {
    "simulate-channel": "AWGN Monte-Carlo with a power-allocated SPARC",
    "simulate-sc": "spatially coupled SPARC: block NMSE wave vs SC state evolution",
    "simulate-bc": "two-user Gaussian broadcast channel",
    "simulate-mac": "two-user Gaussian multiple-access channel",
    "compress": "lossy compression with the successive-cancellation encoder",
    "se": "state evolution trajectory (t, x_t, tau_t^2)",
    "alloc": "power allocation (section, power)",
    "wz-demo": "toy Wyner-Ziv pipeline (exhaustive search)",
    "gp-demo": "toy Gelfand-Pinsker pipeline (exhaustive search)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparc", description="Sparse regression code simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides the config)")
        p.add_argument("--trials", type=int, metavar="N", help="number of trials (overrides the config)")
        p.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
        p.add_argument("--workers", type=int, default=1, metavar="N", help="worker processes (default 1)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override or add a config field (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", "set")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        overrides.update(seed=args.seed, trials=args.trials, out=args.out)
        cfg = load_config(args.config, overrides, COMMANDS[args.command])
        text = to_csv(run_experiment(cfg, args.workers))
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        where = f" [field: {exc.field}]" if exc.field else ""
        print(f"configuration error{where}: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 3
    except SparcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
