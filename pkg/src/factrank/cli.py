"""Command-line entry point.

Subcommands cover the whole workflow: rank a split, evaluate a
prediction file, rank-average several prediction files, re-order a
prediction file by external scores, generate a miniature dataset, render
saved evaluation reports, and export the preprocessed corpus for
downstream trainers.

Conventions shared by every subcommand:
  * dataset root from --data or the FACTRANK_DATA environment variable,
    laid out as tables/ + questions.<split>.tsv + lemmas.tsv + stopwords.txt;
  * outputs are written to a temp file and atomically renamed, so a
    failed run never leaves a partial artifact;
  * exit code 0 on success, 1 on usage/config errors, 2 on data errors;
  * timings and diagnostics go to stderr only, never into artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable

from . import corpus, evaluation
from .corpus import write_warnings
from .errors import DataError
from .fixtures import FixtureSpec, generate
from .pipeline import METHODS, DataPaths, Engine, RunConfig, build_engine
from .rankers import (IterConfig, Ranking, apply_external_scores, ensemble_ranks,
                      read_predictions, read_score_file, render_score_file)
from .tfidf import TfidfConfig

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
ENV_DATA_ROOT = "FACTRANK_DATA"


class _Parser(argparse.ArgumentParser):
    """argparse's default usage-error exit code is 2; this CLI reserves 2
    for data errors, so usage problems must exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class UsageError(Exception):
    """Invalid configuration detected after argument parsing."""


def _write_atomic(path: str | Path, text: str) -> None:
    _write_atomic_lines(path, [text])


def _write_atomic_lines(path: str | Path, chunks: Iterable[str]) -> None:
    """Write chunks to a temp file, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf8", newline="\n") as fh:
            for chunk in chunks:
                fh.write(chunk)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _data_root(args) -> Path:
    root = args.data or os.environ.get(ENV_DATA_ROOT)
    if not root:
        raise UsageError(f"no dataset root: pass --data or set {ENV_DATA_ROOT}")
    return Path(root)


def _detect_splits(root: Path) -> tuple[str, ...]:
    found = sorted(p.name.split(".")[1] for p in root.glob("questions.*.tsv")
                   if len(p.name.split(".")) == 3)
    if not found:
        raise DataError(f"no questions.<split>.tsv files under {root}")
    return tuple(found)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return payload


def _pick(args, file_cfg: dict, key: str, default):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _run_config(args) -> RunConfig:
    cfg = _load_config_file(getattr(args, "config", None))
    unknown = set(cfg) - {"method", "maxlen", "decay", "downscale_base",
                          "smooth_idf", "sublinear_tf", "fit_on_questions",
                          "lemma_order", "workers", "top_n"}
    if unknown:
        raise UsageError(f"unknown config file keys: {sorted(unknown)}")
    try:
        iter_cfg = IterConfig(
            maxlen=int(_pick(args, cfg, "maxlen", 128)),
            decay=float(_pick(args, cfg, "decay", 0.8)),
            downscale_base=float(_pick(args, cfg, "downscale_base", 1.0)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    workers = int(_pick(args, cfg, "workers", 0))
    if workers < 0:
        raise UsageError(f"workers must be >= 0, got {workers}")
    return RunConfig(
        tfidf=TfidfConfig(
            smooth_idf=bool(_pick(args, cfg, "smooth_idf", True)),
            sublinear_tf=bool(_pick(args, cfg, "sublinear_tf", False)),
        ),
        iterated=iter_cfg,
        top_n=int(_pick(args, cfg, "top_n", 64)),
        fit_on_questions=bool(_pick(args, cfg, "fit_on_questions", True)),
        lemma_order=str(_pick(args, cfg, "lemma_order", "inflected_first")),
        workers=workers,
    )


def _build_engine_for(args, splits: tuple[str, ...]) -> Engine:
    root = _data_root(args)
    config = _run_config(args)
    paths = DataPaths.from_root(root, splits)
    engine = build_engine(paths, config, cache_dir=getattr(args, "cache_dir", None))
    if getattr(args, "warnings", None):
        write_warnings(engine.warnings, args.warnings)
    return engine


def _splits_for_fit(args, root: Path, ranked_split: str) -> tuple[str, ...]:
    if getattr(args, "fit_splits", None):
        splits = tuple(s.strip() for s in args.fit_splits.split(",") if s.strip())
    else:
        splits = _detect_splits(root)
    if ranked_split not in splits:
        splits = tuple([*splits, ranked_split])
    return splits


# --- subcommands ------------------------------------------------------------

def cmd_rank(args) -> int:
    root = _data_root(args)
    file_cfg = _load_config_file(getattr(args, "config", None))
    method = _pick(args, file_cfg, "method", "optimized")
    if method not in METHODS:
        raise UsageError(f"unknown ranking method {method!r}")
    splits = _splits_for_fit(args, root, args.split)
    engine = _build_engine_for(args, splits)
    if method == "iterated":
        cfg = engine.config.iterated
        logger.info("iterated config: maxlen=%d decay=%g downscale_base=%g",
                    cfg.maxlen, cfg.decay, cfg.downscale_base)
    rankings = engine.rank_split(args.split, method)
    _write_atomic_lines(
        args.out,
        (f"{r.qid}\t{uid}\n" for r in rankings for uid in r.uids))
    logger.info("wrote %s (%d questions x %d facts)",
                args.out, len(rankings), len(engine.store))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    root = _data_root(args)
    warnings: list = []
    questions = corpus.load_questions(
        root / f"questions.{args.split}.tsv", args.split, warnings)
    if args.warnings:
        write_warnings(warnings, args.warnings)
    rankings = read_predictions(args.pred)
    report = evaluation.evaluate_questions(rankings, questions, missing=args.missing)
    table = evaluation.render_table(report)
    if args.report_json:
        _write_atomic(args.report_json, evaluation.report_to_json(report))
    if args.lengths_csv:
        _write_atomic(args.lengths_csv, evaluation.render_lengths_csv(report))
    if args.table:
        _write_atomic(args.table, table)
    else:
        print(table, end="")
    logger.info("map=%.4f over %d questions (split=%s, missing=%s)",
                report.map, report.n_questions, args.split, args.missing)
    return EXIT_OK


def cmd_ensemble(args) -> int:
    if len(args.preds) < 2:
        raise UsageError("ensemble needs at least two prediction files")
    prediction_sets = [read_predictions(p) for p in args.preds]
    reference = prediction_sets[0]
    by_qid = [{r.qid: r for r in preds} for preds in prediction_sets]
    qid_sets = [set(m) for m in by_qid]
    for path, qids in zip(args.preds[1:], qid_sets[1:]):
        if qids != qid_sets[0]:
            diff = sorted(qids ^ qid_sets[0])
            raise DataError(f"question sets differ between {args.preds[0]} and "
                            f"{path}: {diff[:10]}{'...' if len(diff) > 10 else ''}")
    combined = [ensemble_ranks([m[r.qid] for m in by_qid]) for r in reference]
    _write_atomic_lines(
        args.out, (f"{r.qid}\t{uid}\n" for r in combined for uid in r.uids))
    logger.info("wrote ensemble of %d files to %s", len(args.preds), args.out)
    return EXIT_OK


def cmd_rerank_apply(args) -> int:
    if args.top_n < 1:
        raise UsageError(f"top-n must be >= 1, got {args.top_n}")
    base = read_predictions(args.pred)
    scores = read_score_file(args.scores)
    out: list[Ranking] = []
    for ranking in base:
        if ranking.qid not in scores:
            raise DataError(f"score file {args.scores} has no rows for question "
                            f"{ranking.qid}")
        out.append(apply_external_scores(ranking, scores[ranking.qid], args.top_n))
    _write_atomic_lines(
        args.out, (f"{r.qid}\t{uid}\n" for r in out for uid in r.uids))
    logger.info("reranked top-%d of %d questions into %s",
                args.top_n, len(out), args.out)
    return EXIT_OK


def cmd_gen_fixture(args) -> int:
    try:
        spec = FixtureSpec(
            n_questions=args.questions, n_facts=args.facts, hops=args.hops,
            seed=args.seed,
            splits=tuple(s.strip() for s in args.splits.split(",") if s.strip()),
            n_noise_terms=args.noise_terms)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    generate(spec, args.out)
    logger.info("fixture written to %s (%d questions x %d splits, %d facts)",
                args.out, spec.n_questions, len(spec.splits), spec.n_facts)
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        try:
            reports.append((Path(path).stem,
                            evaluation.report_from_json(
                                Path(path).read_text(encoding="utf8"))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: not an evaluation report: {exc}") from exc
    if len(reports) == 1:
        text = evaluation.render_table(reports[0][1])
    else:
        width = max(len(name) for name, _ in reports)
        lines = [f"{'run':<{width}}  questions       MAP"]
        lines += [f"{name:<{width}}  {rep.n_questions:>9d}  {rep.map:8.4f}"
                  for name, rep in reports]
        text = "\n".join(lines) + "\n"
    if args.lengths_csv:
        if len(reports) != 1:
            raise UsageError("--lengths-csv needs exactly one report")
        _write_atomic(args.lengths_csv, evaluation.render_lengths_csv(reports[0][1]))
    if args.out:
        _write_atomic(args.out, text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_export(args) -> int:
    root = _data_root(args)
    if args.splits:
        splits = tuple(s.strip() for s in args.splits.split(",") if s.strip())
    else:
        splits = _detect_splits(root)
    engine = _build_engine_for(args, splits)

    def rows() -> Iterable[str]:
        from .textproc import question_repr
        for fact, terms in zip(engine.store, engine.fact_terms):
            yield json.dumps({"kind": "fact", "uid": fact.uid, "table": fact.table,
                              "text": fact.text, "terms": terms},
                             sort_keys=True) + "\n"
        for split in splits:
            for q in engine.questions_for(split):
                yield json.dumps(
                    {"kind": "question", "qid": q.qid, "split": split,
                     "text": q.question_text, "answer": q.correct_text,
                     "terms": question_repr(q, engine.lemmas, engine.stops),
                     "gold": [{"uid": ref.uid, "role": ref.role.value}
                              for ref in q.gold]},
                    sort_keys=True) + "\n"

    _write_atomic_lines(args.out, rows())
    logger.info("exported %d facts + questions of splits %s to %s",
                len(engine.store), ",".join(splits), args.out)
    return EXIT_OK


# --- argument wiring --------------------------------------------------------

def _add_data_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", metavar="DIR",
                   help=f"dataset root (default: ${ENV_DATA_ROOT})")
    p.add_argument("--warnings", metavar="FILE",
                   help="write ingestion warnings as JSON lines")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="JSON config file; flags override its values")
    p.add_argument("--maxlen", type=int, help="iteration cap (default 128)")
    p.add_argument("--decay", type=float,
                   help="per-fact weight decay base in (0,1] (default 0.8)")
    p.add_argument("--downscale-base", dest="downscale_base", type=float,
                   help="chain-length scale base in (0,1] (default 1.0)")
    p.add_argument("--smooth-idf", dest="smooth_idf",
                   action=argparse.BooleanOptionalAction,
                   help="smoothed idf (default on)")
    p.add_argument("--sublinear-tf", dest="sublinear_tf",
                   action=argparse.BooleanOptionalAction,
                   help="log-scaled term frequency (default off)")
    p.add_argument("--fit-on-questions", dest="fit_on_questions",
                   action=argparse.BooleanOptionalAction,
                   help="include question text in the idf corpus (default on)")
    p.add_argument("--lemma-order", dest="lemma_order",
                   choices=("inflected_first", "lemma_first"),
                   help="column order of the lemma file")
    p.add_argument("--workers", type=int, help="ranking worker threads")
    p.add_argument("--cache-dir", dest="cache_dir", metavar="DIR",
                   help="reuse precomputed vectors across runs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="factrank",
                     description="Rank explanation facts for science questions "
                                 "and score the rankings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[], help="rank all facts per question")
    _add_data_arg(p)
    _add_model_args(p)
    p.add_argument("--split", default="dev", help="question split to rank")
    p.add_argument("--method", choices=METHODS,
                   help="ranking method (default optimized)")
    p.add_argument("--fit-splits", dest="fit_splits", metavar="S1,S2",
                   help="splits whose questions join the idf corpus "
                        "(default: all question files present)")
    p.add_argument("--out", required=True, help="prediction file to write")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="score a prediction file")
    _add_data_arg(p)
    p.add_argument("--split", default="dev")
    p.add_argument("--pred", required=True, help="prediction file to score")
    p.add_argument("--missing", choices=(evaluation.MISSING_RANK, evaluation.MISSING_ZERO),
                   default=evaluation.MISSING_RANK,
                   help="treatment of gold facts absent from a prediction")
    p.add_argument("--report-json", dest="report_json", metavar="FILE")
    p.add_argument("--table", metavar="FILE",
                   help="write the text table here instead of stdout")
    p.add_argument("--lengths-csv", dest="lengths_csv", metavar="FILE")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble", help="rank-average several prediction files")
    p.add_argument("preds", nargs="+", metavar="PRED")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("rerank-apply",
                       help="reorder top-n of a prediction file by external scores")
    p.add_argument("--pred", required=True, help="base prediction file")
    p.add_argument("--scores", required=True, help="qid/uid/score TSV")
    p.add_argument("--top-n", dest="top_n", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerank_apply)

    p = sub.add_parser("gen-fixture", help="generate a miniature dataset")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--questions", type=int, default=5, help="questions per split")
    p.add_argument("--facts", type=int, default=50)
    p.add_argument("--hops", type=int, default=3, help="gold chain length, 1..16")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--splits", default="dev", metavar="S1,S2")
    p.add_argument("--noise-terms", dest="noise_terms", type=int, default=40,
                   help="background vocabulary size")
    p.set_defaults(func=cmd_gen_fixture)

    p = sub.add_parser("report", help="render saved evaluation reports")
    p.add_argument("reports", nargs="+", metavar="REPORT_JSON")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.add_argument("--lengths-csv", dest="lengths_csv", metavar="FILE")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export",
                       help="dump preprocessed facts and questions as JSON lines")
    _add_data_arg(p)
    _add_model_args(p)
    p.add_argument("--splits", metavar="S1,S2",
                   help="splits to export (default: all present)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"factrank {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"factrank {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"factrank {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
