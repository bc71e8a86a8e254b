"""Command-line interface.

Subcommands: ``profile`` (discovery and pruning stages), ``detect`` (full
run), ``evaluate`` (score predictions against ground truth), and ``explain``
(trace one pair through a saved report).  Exit code 0 is a clean run, 1 a
hard error, and 2 a run that completed with soft failures flagged in the
report.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from fkdetect.config import ConfigError, load_run_config
from fkdetect.gateway import GatewayError
from fkdetect.pipeline import (
    PipelineError,
    report_to_json,
    run_detect,
    run_evaluate,
    run_explain,
    run_profile,
    write_report,
)
from fkdetect.store import StoreError
from fkdetect.verifier import VerifierError

logger = logging.getLogger("fkdetect")

_CONFIG_KEYS = (
    "db", "backend", "script", "base_url", "model", "temperature", "concurrency",
    "max_ucc_arity", "sample_rows", "cache_dir", "out", "truth", "pred",
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--db", help="database source: sqlite file or csv directory")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--backend", choices=["heuristic", "scripted", "http"],
                        help="reasoning backend (default heuristic)")
    parser.add_argument("--script", help="scripted backend: JSON decision map")
    parser.add_argument("--base-url", dest="base_url", help="http backend: chat-completions base URL")
    parser.add_argument("--model", help="model name sent to the http backend")
    parser.add_argument("--temperature", type=float, help="sampling temperature (default 0)")
    parser.add_argument("--concurrency", type=int, help="parallel validation requests (default 4)")
    parser.add_argument("--max-ucc-arity", dest="max_ucc_arity", type=int,
                        help="largest unique column combination searched (default 4)")
    parser.add_argument("--sample-rows", dest="sample_rows", type=int,
                        help="example rows shown per table (default 5)")
    parser.add_argument("--no-mask", action="store_true",
                        help="send the raw database name instead of masking it")
    parser.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")
    parser.add_argument("--out", help="write the JSON result to this path")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fkdetect",
                                     description="Discover foreign keys in a relational database.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", help="run discovery and pruning, report stage counts")
    _add_common(p_profile)
    p_profile.add_argument("--stages", action="store_true",
                           help="emit only the stage-count JSON")

    p_detect = sub.add_parser("detect", help="full detection run producing a prediction report")
    _add_common(p_detect)

    p_eval = sub.add_parser("evaluate", help="score a prediction report against ground truth")
    _add_common(p_eval)
    p_eval.add_argument("--truth", help="ground-truth JSON file")
    p_eval.add_argument("--pred", help="prediction report or bare reference array")

    p_explain = sub.add_parser("explain", help="show evidence and verdict for one pair")
    _add_common(p_explain)
    p_explain.add_argument("--pred", help="prediction report from a previous detect run")
    p_explain.add_argument("--pair", required=True,
                           help="pair to explain, as table.column:table.column")
    return parser


def _gather_cli_values(args: argparse.Namespace) -> dict:
    values = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    if getattr(args, "no_mask", False):
        values["mask"] = False
    return values


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_run_config(_gather_cli_values(args), config_path=getattr(args, "config", None))
        if args.command == "profile":
            result = run_profile(config, stages_only=args.stages)
            flags: list[str] = []
        elif args.command == "detect":
            result = run_detect(config)
            flags = result.get("flags", [])
        elif args.command == "evaluate":
            result = run_evaluate(config)
            flags = []
        else:
            result = run_explain(config, args.pair)
            flags = []
    except (ConfigError, StoreError, PipelineError, GatewayError, VerifierError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report_to_json(result)
    if config.out:
        write_report(result, config.out)
        logger.info("wrote %s", config.out)
        if args.command == "detect":
            summary = {
                "database": result["database"],
                "foreign_keys": len(result["foreign_keys"]),
                "flags": len(flags),
                "out": config.out,
            }
            print(json.dumps(summary, sort_keys=True))
        else:
            print(json.dumps({"out": config.out}, sort_keys=True))
    else:
        sys.stdout.write(text)
    if flags:
        for flag in flags:
            logger.warning("%s", flag)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
