"""Command-line interface.

One subcommand per pipeline stage (each runs the pipeline up to and
including that stage, reusing valid prior outputs), `run` for the whole
pipeline, and `score-pair` for scoring two sentences ad hoc.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 backend
or transport error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .embeddings import EmbeddingBackend, cosine_similarity, embed_batch
from .errors import ConfigError, DataError, RtqeError, TransportError
from .metrics import DEFAULT_BLEU, DEFAULT_CHRF, chrf, sentence_bleu, ter, tf_cosine
from .pipeline import (
    EMBED_METRIC_PREFIX,
    LEXICAL_METRICS,
    STAGE_REPORT,
    STAGES,
    load_config,
    run_pipeline,
)
from .textprep import tokenize

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as ConfigError."""

    def error(self, message):
        raise ConfigError(message)


def _add_stage_command(sub, name: str, through: str, help_text: str):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--config", required=True, help="run configuration file (YAML)")
    p.add_argument("--out", help="override the configured output directory")
    p.set_defaults(func=lambda args: _cmd_stage(args, through))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rtqe",
        description="Reference-free MT quality estimation by round-trip translation.",
    )
    parser.add_argument("--verbose", action="store_true", help="log debug detail")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    stage_help = {
        "ingest": "parse and validate the dataset",
        "roundtrip": "back-translate through the configured MT client",
        "embed": "fetch sentence embeddings for enabled embedding metrics",
        "score": "compute all enabled similarity metrics and failure flags",
        "correlate": "correlate metric scores against human z-means",
        "report": "write the text report and plot data",
    }
    for stage in STAGES:
        _add_stage_command(sub, stage, stage, stage_help[stage])
    _add_stage_command(sub, "run", STAGE_REPORT, "run every stage in order")

    p = sub.add_parser("score-pair", help="score two sentences against each other")
    p.add_argument("reference", help="reference sentence (the original)")
    p.add_argument("hypothesis", help="hypothesis sentence (the candidate)")
    p.add_argument(
        "--metrics",
        default=",".join(LEXICAL_METRICS),
        help="comma-separated metric names (default: all lexical metrics)",
    )
    p.add_argument(
        "--embed-http",
        help="encoder service URL, required for embed_cosine:<model_id> metrics",
    )
    p.set_defaults(func=_cmd_score_pair)
    return parser


def _cmd_stage(args, through: str) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    manifest = run_pipeline(cfg, through=through)
    for stage, info in manifest.stages.items():
        detail = f" ({info['records']} records)" if info.get("records") else ""
        print(f"{stage}: {info['status']}{detail}")
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"outputs: {cfg.output_dir}")
    return EXIT_OK


def _score_pair_value(metric_id: str, reference: str, hypothesis: str, embed_url) -> float:
    if metric_id == "bleu":
        return sentence_bleu(
            tokenize(hypothesis, "simple"), tokenize(reference, "simple"), DEFAULT_BLEU
        ).value
    if metric_id == "chrf":
        return chrf(hypothesis, reference, DEFAULT_CHRF).value
    if metric_id == "ter":
        return ter(tokenize(hypothesis, "simple"), tokenize(reference, "simple")).value
    if metric_id == "tf_cosine":
        return tf_cosine(reference, hypothesis).value
    model_id = metric_id[len(EMBED_METRIC_PREFIX):]
    backend = EmbeddingBackend(kind="http", model_id=model_id, locator=embed_url)
    vectors = embed_batch(backend, [reference, hypothesis])
    return cosine_similarity(vectors[0], vectors[1]).value


def _cmd_score_pair(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise ConfigError("no metrics given")
    valid = ", ".join(LEXICAL_METRICS + (EMBED_METRIC_PREFIX + "<model_id>",))
    for metric_id in metrics:
        if metric_id in LEXICAL_METRICS:
            continue
        if metric_id.startswith(EMBED_METRIC_PREFIX):
            if not args.embed_http:
                raise ConfigError(f"{metric_id} needs --embed-http <url>")
            continue
        raise ConfigError(f"unknown metric {metric_id!r}; valid metrics: {valid}")

    for metric_id in metrics:
        value = _score_pair_value(metric_id, args.reference, args.hypothesis, args.embed_http)
        print(f"{metric_id}\t{value:.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except ConfigError as exc:
        print(f"rtqe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"rtqe: transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except RtqeError as exc:
        print(f"rtqe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"rtqe: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
