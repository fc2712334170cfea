"""Command-line entry point.

Exit codes: 0 success, 1 data/contract error, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from . import pipeline
from .config import ConfigError, PipelineConfig, build_config, read_config_file
from .container import ContainerError
from .corpus import CorpusError

COMMANDS = {
    "ingest": "validate a jsonl/tsv corpus and write it as canonical jsonl",
    "annotate": "assign weak labels (1/-1/0) with the valence scorer",
    "filtrate": "train the one-class model on negative+neutral docs and quarantine look-alike positives",
    "train": "split 80/20, train the chosen classifier, write model and reports",
    "evaluate": "score a saved model on a labeled corpus",
    "gate": "stream jsonl from stdin, emit predicted-positive records on stdout",
    "gradcheck": "finite-difference check of the CNN backward pass",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsgate", description="Positive-news gate")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value config file (sections allowed)")
        p.add_argument("-v", "--verbose", action="store_true")
        for f in fields(PipelineConfig):
            p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                           metavar=f.type.upper() if f.type in ("int", "float") else "VALUE")
    return parser


def _emit_summary(summary: dict) -> None:
    for key, value in summary.items():
        print(f"{key}={value}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        overrides = {f.name: getattr(args, f.name) for f in fields(PipelineConfig)}
        cfg = build_config(file_values, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "ingest":
            summary = pipeline.run_ingest(cfg)
        elif args.command == "annotate":
            summary = pipeline.run_annotate(cfg)
            print(f"positive={summary['positive']} negative={summary['negative']} "
                  f"neutral={summary['neutral']}")
            return 0
        elif args.command == "filtrate":
            summary = pipeline.run_filtrate(cfg)
        elif args.command == "train":
            summary = pipeline.run_train_evaluate(cfg)
        elif args.command == "evaluate":
            summary = pipeline.run_evaluate(cfg)
        elif args.command == "gate":
            summary = pipeline.run_gate(cfg)
        else:
            worst = pipeline.run_gradcheck(cfg)
            for group, err in worst.items():
                print(f"{group}={err:.3e}")
            return 0 if max(worst.values()) < 1e-4 else 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ContainerError, pipeline.PipelineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit_summary(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
