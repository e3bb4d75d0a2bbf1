"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 on success, 1 for usage or config problems, 2 for data
problems (bad input files, missing upstream stage outputs).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .pipeline import STAGES, ConfigError, DataError, parse_config

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hoodclaims",
        description="Neighborhood-claim analysis pipeline for rental listings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="subcommand")

    descriptions = {
        "ingest": "ingest, clean, and deduplicate the corpus",
        "label-string": "label claims by gazetteer string matching",
        "label-llm": "label claims via a chat-completion service (or cache replay)",
        "evaluate": "score labels against the gold set",
        "geo": "social centers, distances, peripheral flags, claim points",
        "topics": "fit the topic model and coherence",
        "regress": "regress relative distance on covariates and topics",
        "report": "representation table, decile curves, neighborhood overlays",
    }
    for name in STAGES:
        sub = subparsers.add_parser(name, help=descriptions[name], description=descriptions[name])
        sub.add_argument("--config", required=True, help="path to the pipeline config file")
        sub.add_argument("--out", default="out", help="output directory (default: ./out)")
        if name == "label-llm":
            sub.add_argument("--model", help="override llm_model from the config")
            sub.add_argument("--temperature", type=float, help="override llm_temperature")
            sub.add_argument("--max-rpm", type=int, help="override llm_max_rpm")
            sub.add_argument("--cache", help="override llm_cache path")
            sub.add_argument(
                "--offline",
                action="store_true",
                help="replay the response cache; any miss is a failure",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        config = parse_config(args.config)
        if args.command == "label-llm":
            if args.model:
                config.llm_model = args.model
            if args.temperature is not None:
                config.llm_temperature = args.temperature
            if args.max_rpm is not None:
                config.llm_max_rpm = args.max_rpm
            if args.cache:
                config.llm_cache = Path(args.cache).resolve()
            if args.offline:
                config.llm_offline = True
        rows = STAGES[args.command](config, Path(args.out))
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary = ", ".join(f"{key}={value}" for key, value in rows.items())
    print(f"{args.command}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
