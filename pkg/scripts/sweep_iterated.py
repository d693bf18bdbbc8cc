#!/usr/bin/env python3
"""Grid sweep over the iterated-ranker knobs; writes one CSV row per config.

The iterative ranker exposes two decay constants whose best values depend on
the corpus: ``decay`` (per-step weight on each newly absorbed fact) and
``downscale_base`` (per-step rescaling of the running query vector).  This
script fixes the dataset, fits the TF-IDF model once per weighting variant,
and re-ranks the chosen split for every combination in the grid, so the cost
per point is ranking + evaluation only.

Typical use against a real dataset root::

    python3 scripts/sweep_iterated.py --data /path/to/root --split dev \
        --decay 0.6,0.7,0.8,0.9,1.0 --downscale-base 0.8,0.9,1.0 \
        --out sweep.csv

Without --data it falls back to the FACTRANK_DATA environment variable.
The CSV is ordered by the grid; the best row is also logged to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from factrank.evaluation import mean_ap
from factrank.pipeline import DataPaths, RunConfig, build_engine, iterated_with
from factrank.tfidf import TfidfConfig

logger = logging.getLogger("sweep_iterated")

FIELDS = ("sublinear_tf", "smooth_idf", "maxlen", "decay", "downscale_base",
          "map", "n_questions", "seconds")


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}: {exc}")
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", default=os.environ.get("FACTRANK_DATA"),
                        help="dataset root (default: FACTRANK_DATA env var)")
    parser.add_argument("--split", default="dev", help="split to rank and score")
    parser.add_argument("--fit-splits", default=None,
                        help="comma-separated splits whose questions join the idf corpus "
                             "(default: just --split)")
    parser.add_argument("--decay", type=parse_floats, default=(0.6, 0.7, 0.8, 0.9, 1.0))
    parser.add_argument("--downscale-base", type=parse_floats, default=(0.8, 0.9, 1.0))
    parser.add_argument("--maxlen", type=int, default=128)
    parser.add_argument("--tf-variants", action="store_true",
                        help="also sweep sublinear_tf on/off (doubles fit cost)")
    parser.add_argument("--workers", type=int, default=0)
    parser.add_argument("--cache-dir", default=None,
                        help="reuse fitted vectors across invocations")
    parser.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = parse_args(argv)
    if not args.data:
        logger.error("no dataset root; pass --data or set FACTRANK_DATA")
        return 1

    splits = tuple(s for s in (args.fit_splits or args.split).split(",") if s)
    if args.split not in splits:
        splits = splits + (args.split,)
    paths = DataPaths.from_root(args.data, splits)

    rows: list[dict] = []
    tf_variants = (False, True) if args.tf_variants else (False,)
    for sublinear in tf_variants:
        config = RunConfig(tfidf=TfidfConfig(sublinear_tf=sublinear),
                           workers=args.workers)
        engine = build_engine(paths, config, cache_dir=args.cache_dir)
        golds = engine.gold_sets(args.split)
        for decay in args.decay:
            for base in args.downscale_base:
                engine.config = iterated_with(config, maxlen=args.maxlen,
                                              decay=decay, downscale_base=base)
                t0 = time.perf_counter()
                rankings = engine.rank_split(args.split, "iterated")
                report = mean_ap(rankings, golds)
                rows.append({
                    "sublinear_tf": int(sublinear),
                    "smooth_idf": int(config.tfidf.smooth_idf),
                    "maxlen": args.maxlen,
                    "decay": decay,
                    "downscale_base": base,
                    "map": f"{report.map:.6f}",
                    "n_questions": report.n_questions,
                    "seconds": f"{time.perf_counter() - t0:.2f}",
                })
                logger.info("decay=%.3f downscale=%.3f sublinear=%d -> MAP %.4f",
                            decay, base, sublinear, report.map)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()

    best = max(rows, key=lambda r: float(r["map"]))
    logger.info("best: decay=%s downscale_base=%s sublinear_tf=%s MAP=%s",
                best["decay"], best["downscale_base"], best["sublinear_tf"], best["map"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
