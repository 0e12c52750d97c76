"""``tsmc <subcommand> --config FILE [--seed N] [--out CSV] [--set key=value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, NumericsError
from . import experiments as ex
from .config import load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS = 0, 2, 3

COMMANDS = {
    "taps": ex.run_taps,
    "ber": ex.run_ber,
    "mismatch": ex.run_mismatch,
    "quantizer": ex.run_quantizer,
    "reaction": ex.run_reaction,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsmc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value file")
        p.add_argument("--seed", type=int, help="overrides the seed in the config")
        p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key (repeatable)")
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if args.seed is not None:
        out["seed"] = str(args.seed)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        rows = COMMANDS[args.command](cfg)
        ex.emit_csv(rows, "/dev/stdout" if args.out == "-" else args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerics error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
