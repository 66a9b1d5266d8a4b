"""Command-line front end: one subcommand per experiment kind.

    loopcover <kind> --config cfg.json [--seed N] [--out PATH] [--format csv|json]

Exit codes: 0 success, 2 configuration/validation error, 3 infeasible request
(subset DP beyond 14 vertices, bridge length beyond the cap, untruncatable
killing rates).
"""
from __future__ import annotations

import argparse
import sys

from .errors import InfeasibleError
from .experiments import KINDS, ConfigError, load_config, run, with_overrides, write_record


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopcover",
        description="Reproducible loop-covering experiments on finite graphs.",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output path")
        p.add_argument("--format", choices=("csv", "json"), dest="fmt",
                       help="override the output format")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.kind != args.kind:
            raise ConfigError(
                [f"kind: config says {config.kind!r} but subcommand is {args.kind!r}"]
            )
        config = with_overrides(config, args.seed, args.out, args.fmt)
        record = run(config)
    except ConfigError as err:
        for diagnostic in err.diagnostics:
            print(f"error: {diagnostic}", file=sys.stderr)
        return 2
    except InfeasibleError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    text = write_record(record, config.output_path, config.output_format)
    if config.output_path:
        print(f"wrote {config.output_path}: {len(record.rows)} rows")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
