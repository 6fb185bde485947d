"""
Command line entry point.

    gktwist <subcommand> --config PATH [--out PATH] [--seed N]
            [--tol-override key=value ...] [--goldens PATH] [--freeze-goldens PATH]

Subcommands run one suite (fiber-algebra, courant, connection, theorem,
bihermitian) or `all`, which runs the config's `checks` list. The JSON
report goes to stdout unless --out is given; logs go to stderr.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error.
"""

import argparse
import json
import logging
import sys

from gktwist import __version__
from gktwist.core.config import get_settings
from gktwist.core.errors import ConfigError
from gktwist.models.models import SuiteName
from gktwist.schemas.config import load_config
from gktwist.services.runner import freeze_goldens, load_goldens, run

logger = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_overrides(items: list[str]) -> dict[str, float]:
    overrides = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--tol-override expects key=value, got {item!r}")
        try:
            overrides[key.strip()] = float(raw)
        except ValueError:
            raise ConfigError(f"--tol-override {key}: {raw!r} is not a number") from None
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run config")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--goldens", help="JSON map of residual keys to compare against")
    common.add_argument("--freeze-goldens", metavar="PATH", help="write nonzero residuals as goldens")
    common.add_argument("--no-timing", action="store_true", help="leave wall times out of the report")
    common.add_argument("--log-level", default=None, help="defaults to GKTWIST_LOG_LEVEL or INFO")

    parser = argparse.ArgumentParser(prog="gktwist", description="Twistor generalized Kaehler verification workbench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    for suite in SuiteName:
        commands.add_parser(suite.value, parents=[common], help=f"run the {suite.value} suite")
    commands.add_parser("all", parents=[common], help="run every suite listed in the config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(level=(args.log_level or settings.log_level).upper(), stream=sys.stderr)

    try:
        config = load_config(args.config)
        overrides = parse_overrides(args.tol_override)
        goldens = load_goldens(args.goldens) if args.goldens else {}
        suites = None if args.command == "all" else [SuiteName(args.command)]
        report = run(config, suites=suites, tol_overrides=overrides, goldens=goldens, seed=args.seed)
    except ConfigError as exc:
        logger.error(f"config error: {exc}")
        return EXIT_CONFIG

    if args.no_timing:
        report.timing = None
    text = report.model_dump_json(indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info(f"report written to {args.out}")
    else:
        sys.stdout.write(text)

    if args.freeze_goldens:
        frozen = freeze_goldens(report, report.tolerances["nonflat_floor"])
        with open(args.freeze_goldens, "w", encoding="utf-8") as handle:
            json.dump(frozen, handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.info(f"froze {len(frozen)} goldens to {args.freeze_goldens}")

    return EXIT_PASS if report.status.value == "pass" else EXIT_FAIL
