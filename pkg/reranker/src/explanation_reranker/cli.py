"""Command line front end: build-targets, train, score.

Mirrors the retrieval engine's conventions: logs to stderr, artifacts
written atomically where cheap, exit code 0 on success, 1 for usage
errors, 2 for data or model errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .corpus_io import RerankerError, read_export, read_predictions, write_score_file
from .modeling import DEFAULT_MODEL, RerankerConfig
from .scoring import score_candidates
from .targets import build_soft_targets
from .training import make_pairs, train

logger = logging.getLogger("explanation_reranker")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _splits(text: str | None) -> list[str] | None:
    if text is None:
        return None
    parts = [p for p in text.split(",") if p]
    return parts or None


def _config(args) -> RerankerConfig:
    kwargs = {}
    for field in ("top_n", "epochs", "learning_rate", "batch_size",
                  "max_length", "candidates_per_question", "seed"):
        value = getattr(args, field, None)
        if value is not None:
            kwargs[field] = value
    if getattr(args, "model", None) is not None:
        kwargs["model_name"] = args.model
    try:
        return RerankerConfig(**kwargs)
    except ValueError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from exc


def cmd_build_targets(args) -> int:
    corpus = read_export(args.export)
    targets = build_soft_targets(corpus, _splits(args.splits))
    lines = ["qid\tuid\trelevance"]
    lines.extend(f"{t.qid}\t{t.uid}\t{t.relevance:.10g}" for t in targets)
    with open(args.out, "w", encoding="utf8") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.info("wrote %d targets to %s", len(targets), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    corpus = read_export(args.export)
    splits = _splits(args.splits)
    targets = build_soft_targets(corpus, splits)
    pairs = make_pairs(corpus, targets, cfg, splits)
    log = train(pairs, cfg, args.out_dir, device=args.device)
    logger.info("final epoch mean loss: %.6f", log["epochs"][-1]["mean_loss"])
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _config(args)
    corpus = read_export(args.export)
    base = read_predictions(args.base)
    rows = score_candidates(args.model_dir, corpus, base, cfg,
                            _splits(args.splits), device=args.device)
    write_score_file(args.out, rows)
    logger.info("wrote %d score rows to %s", len(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="explanation-reranker",
                     description="train/apply a learned explanation re-scorer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-targets", parents=[],
                       help="soft relevance of every fact to every question")
    p.add_argument("--export", required=True, help="engine corpus export (JSONL)")
    p.add_argument("--splits", metavar="S1,S2", help="default: all in export")
    p.add_argument("--out", required=True, help="qid/uid/relevance TSV")
    p.set_defaults(func=cmd_build_targets)

    p = sub.add_parser("train", help="fine-tune the regression head")
    p.add_argument("--export", required=True)
    p.add_argument("--splits", metavar="S1,S2", help="training splits")
    p.add_argument("--out-dir", dest="out_dir", required=True,
                   help="model artifact directory")
    p.add_argument("--model", default=None,
                   help=f"base model name or path (default {DEFAULT_MODEL})")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--max-length", dest="max_length", type=int, default=None)
    p.add_argument("--candidates", dest="candidates_per_question", type=int,
                   default=None, help="training pairs sampled per question")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="re-score the head of a base ranking")
    p.add_argument("--export", required=True)
    p.add_argument("--splits", metavar="S1,S2", help="questions to score")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--base", required=True, help="engine prediction file")
    p.add_argument("--top-n", dest="top_n", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--max-length", dest="max_length", type=int, default=None)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="score file for rerank-apply")
    p.set_defaults(func=cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        from transformers.utils import logging as hf_logging
        hf_logging.disable_progress_bar()
    except Exception:
        pass
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RerankerError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
