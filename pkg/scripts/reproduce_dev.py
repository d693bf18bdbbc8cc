#!/usr/bin/env python3
"""End-to-end run of both rankers with per-phase timing and a MAP summary.

Builds the engine once, ranks the requested splits with the one-shot and the
iterated ranker, and prints a small table: MAP per (method, split) plus the
fit/transform/rank timings.  Prediction files and JSON reports land in
--out-dir so the numbers can be re-checked later with ``factrank evaluate``.

    python3 scripts/reproduce_dev.py --data /path/to/root --splits dev,test \
        --decay 0.8 --downscale-base 1.0 --out-dir runs/baseline
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from factrank.evaluation import evaluate_questions, report_to_json
from factrank.pipeline import DataPaths, RunConfig, build_engine, iterated_with
from factrank.rankers import render_predictions
from factrank.tfidf import TfidfConfig

logger = logging.getLogger("reproduce_dev")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", default=os.environ.get("FACTRANK_DATA"),
                        help="dataset root (default: FACTRANK_DATA env var)")
    parser.add_argument("--splits", default="dev",
                        help="comma-separated splits to rank (default: dev)")
    parser.add_argument("--methods", default="optimized,iterated")
    parser.add_argument("--maxlen", type=int, default=128)
    parser.add_argument("--decay", type=float, default=0.8)
    parser.add_argument("--downscale-base", type=float, default=1.0)
    parser.add_argument("--sublinear-tf", action="store_true")
    parser.add_argument("--workers", type=int, default=0)
    parser.add_argument("--cache-dir", default=None)
    parser.add_argument("--out-dir", default=None,
                        help="write predictions + reports here (optional)")
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = parse_args(argv)
    if not args.data:
        logger.error("no dataset root; pass --data or set FACTRANK_DATA")
        return 1

    splits = tuple(s for s in args.splits.split(",") if s)
    methods = tuple(m for m in args.methods.split(",") if m)
    paths = DataPaths.from_root(args.data, splits)
    config = iterated_with(
        RunConfig(tfidf=TfidfConfig(sublinear_tf=args.sublinear_tf),
                  workers=args.workers),
        maxlen=args.maxlen, decay=args.decay, downscale_base=args.downscale_base)
    engine = build_engine(paths, config, cache_dir=args.cache_dir)

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    results: list[tuple[str, str, float, int, float]] = []
    for split in splits:
        questions = engine.questions_for(split)
        for method in methods:
            rankings = engine.rank_split(split, method)
            report = evaluate_questions(rankings, questions)
            elapsed = engine.timings[f"rank.{method}.{split}"]
            results.append((method, split, report.map, report.n_questions, elapsed))
            if out_dir is not None:
                stem = out_dir / f"{method}.{split}"
                stem.with_suffix(".pred.tsv").write_text(
                    render_predictions(rankings), encoding="utf-8")
                stem.with_suffix(".report.json").write_text(
                    report_to_json(report), encoding="utf-8")

    print(f"{'method':<10} {'split':<6} {'MAP':>8} {'questions':>9} {'rank_s':>8}")
    for method, split, score, n, elapsed in results:
        print(f"{method:<10} {split:<6} {score:>8.4f} {n:>9d} {elapsed:>8.2f}")
    for phase in ("load", "fit", "transform"):
        if phase in engine.timings:
            print(f"# {phase}: {engine.timings[phase]:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
