"""Command-line entry point.

Subcommands mirror the pipeline stages: ``prepare`` builds the splits
from a raw CSV dump, ``respond-ir`` runs the BM25 responder, ``evaluate``
scores any responder's output, ``report`` renders score tables and
figures, and ``vocab`` exports the top-N vocabulary for downstream
models. Exit codes: 0 on success, 1 for usage or configuration problems,
2 for data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .corpus import DEFAULT_REDIRECT_PATTERNS, SplitConfig
from .errors import ConfigError, DataError
from .metrics import METRIC_NAMES
from .retrieval import DEFAULT_B, DEFAULT_K1


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as ConfigError."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="supportbench",
        description="Benchmark harness for retrieval-based customer support bots.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="build train/test splits from a tweet CSV dump")
    p.add_argument("--csv", required=True, help="raw tweet dump (CSV)")
    p.add_argument("--brand", required=True, help="support account handle to keep")
    p.add_argument("--train-days", type=int, default=60, help="train window length")
    p.add_argument("--test-days", type=int, default=5, help="test window length")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--redirect-pattern",
        action="append",
        dest="redirect_patterns",
        metavar="REGEX",
        help="case-insensitive redirect pattern (repeatable; replaces the defaults)",
    )
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("respond-ir", help="answer the test split with the BM25 responder")
    p.add_argument("--train", required=True, help="train split JSONL")
    p.add_argument("--test", required=True, help="test split JSONL")
    p.add_argument("--k1", type=float, default=DEFAULT_K1, help="BM25 k1")
    p.add_argument("--b", type=float, default=DEFAULT_B, help="BM25 b")
    p.add_argument(
        "--analysis",
        choices=("standard", "english"),
        default="standard",
        help="index analysis chain",
    )
    p.add_argument(
        "--fallback",
        default="",
        help="response used when retrieval returns nothing",
    )
    p.add_argument("--out", required=True, help="responses JSONL to write")
    p.set_defaults(func=_cmd_respond_ir)

    p = sub.add_parser("evaluate", help="score a responses file with all five measures")
    p.add_argument("--responses", required=True, help="responses JSONL")
    p.add_argument("--embeddings", required=True, help="word embedding file")
    p.add_argument(
        "--embeddings-format",
        choices=("text", "binary"),
        default="text",
        help="embedding file layout",
    )
    p.add_argument(
        "--test",
        default=None,
        help="test split JSONL; when given, responses must cover it exactly",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="render score tables and figures from reports")
    p.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        metavar="REPORT",
        help="report JSON files, one per system (row order = input order)",
    )
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("vocab", help="export the top-N vocabulary of the train split")
    p.add_argument("--train", required=True, help="train split JSONL")
    p.add_argument("--size", type=int, default=8192, help="vocabulary size budget")
    p.add_argument("--out", required=True, help="vocabulary file to write")
    p.set_defaults(func=_cmd_vocab)

    return parser


def _cmd_prepare(args) -> int:
    cfg = SplitConfig(
        train_window_days=args.train_days,
        test_window_days=args.test_days,
        brand=args.brand,
    )
    patterns = args.redirect_patterns or DEFAULT_REDIRECT_PATTERNS
    stats = harness.prepare(args.csv, args.brand, cfg, args.out, patterns)
    print(json.dumps(stats, ensure_ascii=False, indent=2))
    return 0


def _cmd_respond_ir(args) -> int:
    outcome = harness.respond_ir(
        args.train,
        args.test,
        args.out,
        k1=args.k1,
        b=args.b,
        analysis=args.analysis,
        fallback=args.fallback,
    )
    print(
        f"wrote {outcome['responses']} responses "
        f"({outcome['fallbacks']} fallbacks) to {args.out}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    report = harness.evaluate(
        args.responses,
        args.embeddings,
        args.out,
        emb_format=args.embeddings_format,
        test_path=args.test,
    )
    print(f"system: {report.system}")
    for name in METRIC_NAMES:
        label = harness.METRIC_LABELS[name]
        print(f"{label}: {harness.format_score(report.scores_x100[name])}")
    print(
        f"pairs: {report.pair_count} covered: {report.covered_count} "
        f"uncovered: {report.uncovered_count}"
    )
    print(f"fingerprint: {report.fingerprint}")
    return 0


def _cmd_report(args) -> int:
    result = harness.report(args.inputs, args.out)
    print(result["text"], end="")
    return 0


def _cmd_vocab(args) -> int:
    vocab = harness.build_vocab_file(args.train, args.out, size=args.size)
    print(f"wrote vocabulary of {len(vocab)} words to {args.out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
