"""End-to-end engine assembly: files in, fitted model and rankings out.

All heavy state (fact store, fitted model, fact matrix, question vectors)
is built once per run and is immutable afterwards, so per-question
ranking can fan out across worker threads. Phase wall-clock times are
logged to stderr; artifacts never contain timing data.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import corpus, textproc, tfidf
from .corpus import FactStore, IngestionError, LemmaMap, Question, WarningRecord
from .rankers import FactIndex, IterConfig, Ranking, rank_iterated, rank_optimized
from .textproc import TermSeq, Vocabulary
from .tfidf import SparseVector, TfidfConfig, TfidfModel

logger = logging.getLogger(__name__)

METHODS = ("optimized", "iterated")


@dataclass(frozen=True)
class DataPaths:
    """Locations of the four dataset ingredients."""

    tables_dir: Path
    question_files: dict[str, Path]  # split tag -> file
    lemma_file: Path
    stopword_file: Path

    @classmethod
    def from_root(cls, root: str | Path, splits: tuple[str, ...]) -> "DataPaths":
        """Conventional layout: tables/, questions.<split>.tsv, lemmas.tsv,
        stopwords.txt directly under ``root``."""
        root = Path(root)
        return cls(
            tables_dir=root / "tables",
            question_files={s: root / f"questions.{s}.tsv" for s in splits},
            lemma_file=root / "lemmas.tsv",
            stopword_file=root / "stopwords.txt",
        )

    def validate(self) -> None:
        missing = [str(p) for p in
                   [self.tables_dir, *self.question_files.values(),
                    self.lemma_file, self.stopword_file]
                   if not p.exists()]
        if missing:
            raise IngestionError("missing dataset paths: " + ", ".join(missing))


@dataclass(frozen=True)
class RunConfig:
    """Everything that can change a ranking run; no RNG anywhere."""

    tfidf: TfidfConfig = TfidfConfig()
    iterated: IterConfig = IterConfig()
    top_n: int = 64
    fit_on_questions: bool = True  # idf corpus = facts + question reprs
    lemma_order: str = "inflected_first"
    workers: int = 0

    def content_key(self) -> str:
        return json.dumps({
            "smooth_idf": self.tfidf.smooth_idf,
            "sublinear_tf": self.tfidf.sublinear_tf,
            "fit_on_questions": self.fit_on_questions,
            "lemma_order": self.lemma_order,
        }, sort_keys=True)


@dataclass
class Engine:
    """Fitted retrieval state for one dataset + config."""

    config: RunConfig
    store: FactStore
    lemmas: LemmaMap
    stops: set[str]
    questions: dict[str, list[Question]]
    fact_terms: list[TermSeq]
    model: TfidfModel
    index: FactIndex
    qvecs: dict[str, list[SparseVector]]
    warnings: list[WarningRecord] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def questions_for(self, split: str) -> list[Question]:
        if split not in self.questions:
            raise IngestionError(f"split {split!r} not loaded; have {sorted(self.questions)}")
        return self.questions[split]

    def rank_split(self, split: str, method: str) -> list[Ranking]:
        """Rank every question of a split; output order = question order."""
        if method not in METHODS:
            raise ValueError(f"unknown ranking method {method!r}")
        qs = self.questions_for(split)
        vecs = self.qvecs[split]

        def one(i: int) -> Ranking:
            q, v = qs[i], vecs[i]
            if method == "optimized":
                return rank_optimized(q.qid, v, self.index)
            return rank_iterated(q.qid, v, self.index, self.config.iterated)

        t0 = time.perf_counter()
        if self.config.workers > 1 and len(qs) > 1:
            with concurrent.futures.ThreadPoolExecutor(self.config.workers) as pool:
                rankings = list(pool.map(one, range(len(qs))))
        else:
            rankings = [one(i) for i in range(len(qs))]
        elapsed = time.perf_counter() - t0
        self.timings[f"rank.{method}.{split}"] = elapsed
        logger.info("rank method=%s split=%s questions=%d facts=%d time=%.3fs",
                    method, split, len(qs), len(self.store), elapsed)
        return rankings

    def gold_sets(self, split: str) -> dict[str, set[str]]:
        return {q.qid: set(q.gold_uids) for q in self.questions_for(split)}


def build_engine(paths: DataPaths, config: RunConfig = RunConfig(),
                 cache_dir: str | Path | None = None) -> Engine:
    """Load, fit, and vectorize. The only function that touches disk."""
    paths.validate()
    warnings: list[WarningRecord] = []
    t0 = time.perf_counter()
    store = corpus.load_tablestore(paths.tables_dir, warnings)
    lemmas = corpus.load_lemmas(paths.lemma_file, config.lemma_order, warnings)
    stops = corpus.load_stopwords(paths.stopword_file)
    questions = {split: corpus.load_questions(path, split, warnings)
                 for split, path in paths.question_files.items()}
    for qs in questions.values():
        corpus.resolve_gold(qs, store, warnings)
    t_load = time.perf_counter()
    logger.info("load facts=%d questions=%s lemmas=%d time=%.3fs",
                len(store), {s: len(q) for s, q in questions.items()},
                len(lemmas), t_load - t0)

    fact_terms = [textproc.preprocess(f.text, lemmas, stops) for f in store]
    q_terms = {split: [textproc.question_repr(q, lemmas, stops) for q in qs]
               for split, qs in questions.items()}

    cached = _cache_load(cache_dir, store, questions, config) if cache_dir else None
    if cached is not None:
        model, index, qvecs = cached
        t_fit = t_tr = time.perf_counter()
    else:
        fit_docs = list(fact_terms)
        if config.fit_on_questions:
            for split in sorted(q_terms):
                fit_docs.extend(q_terms[split])
        model = tfidf.fit(fit_docs, config.tfidf)
        t_fit = time.perf_counter()
        index = FactIndex.build(model, store, fact_terms)
        qvecs = {split: [tfidf.transform(model, terms) for terms in seqs]
                 for split, seqs in q_terms.items()}
        t_tr = time.perf_counter()
        if cache_dir:
            _cache_save(cache_dir, store, questions, config, model, index, qvecs)
    logger.info("fit vocab=%d docs=%d time=%.3fs; transform time=%.3fs",
                model.vocab.size, model.n_docs, t_fit - t_load, t_tr - t_fit)

    engine = Engine(config=config, store=store, lemmas=lemmas, stops=stops,
                    questions=questions, fact_terms=fact_terms, model=model,
                    index=index, qvecs=qvecs, warnings=warnings)
    engine.timings.update({"load": t_load - t0, "fit": t_fit - t_load,
                           "transform": t_tr - t_fit})
    return engine


# --- vector cache -----------------------------------------------------------
# Purely an optimization: hits restore the exact arrays that were saved, so
# results cannot differ; any problem whatsoever is treated as a miss.

def _cache_key(store: FactStore, questions: dict[str, list[Question]],
               config: RunConfig) -> str:
    h = hashlib.sha256()
    h.update(config.content_key().encode())
    h.update(corpus.dump_canonical(store).encode())
    for split in sorted(questions):
        for q in questions[split]:
            h.update(f"{split}\t{q.qid}\t{q.question_text}\t{q.correct_text}\n".encode())
    return h.hexdigest()[:32]


def _cache_load(cache_dir, store, questions, config):
    path = Path(cache_dir) / f"vectors-{_cache_key(store, questions, config)}.npz"
    try:
        with np.load(path, allow_pickle=False) as z:
            vocab = Vocabulary(
                {t: i for i, t in enumerate(z["terms"].tolist())}, z["df"])
            model = TfidfModel(vocab=vocab, idf=z["idf"],
                               n_docs=int(z["n_docs"]), config=config.tfidf)
            fact_vectors = _unpack_vectors(z, "facts")
            index = FactIndex(store, fact_vectors, vocab.size, model=model)
            qvecs = {split: _unpack_vectors(z, f"q.{split}")
                     for split in sorted(questions)}
        logger.info("vector cache hit: %s", path.name)
        return model, index, qvecs
    except Exception:
        return None


def _cache_save(cache_dir, store, questions, config, model, index, qvecs) -> None:
    cache_dir = Path(cache_dir)
    path = cache_dir / f"vectors-{_cache_key(store, questions, config)}.npz"
    try:
        cache_dir.mkdir(parents=True, exist_ok=True)
        arrays: dict[str, np.ndarray] = {
            "terms": np.asarray(
                sorted(model.vocab.term_to_id, key=model.vocab.term_to_id.get)),
            "df": model.vocab.df,
            "idf": model.idf,
            "n_docs": np.asarray(model.n_docs),
        }
        _pack_vectors(arrays, "facts", index.vectors)
        for split, vecs in qvecs.items():
            _pack_vectors(arrays, f"q.{split}", vecs)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez_compressed(fh, **arrays)
        tmp.replace(path)
    except OSError:
        logger.warning("vector cache write failed for %s", path)


def _pack_vectors(arrays: dict, prefix: str, vectors: list[SparseVector]) -> None:
    arrays[f"{prefix}.indptr"] = np.cumsum([0] + [v.nnz for v in vectors])
    arrays[f"{prefix}.ids"] = (np.concatenate([v.ids for v in vectors])
                               if vectors else np.empty(0, dtype=np.int64))
    arrays[f"{prefix}.weights"] = (np.concatenate([v.weights for v in vectors])
                                   if vectors else np.empty(0, dtype=np.float64))


def _unpack_vectors(z, prefix: str) -> list[SparseVector]:
    indptr = z[f"{prefix}.indptr"]
    ids, weights = z[f"{prefix}.ids"], z[f"{prefix}.weights"]
    return [SparseVector(ids[a:b], weights[a:b])
            for a, b in zip(indptr[:-1], indptr[1:])]


def iterated_with(config: RunConfig, **kwargs) -> RunConfig:
    """RunConfig with IterConfig fields replaced; convenience for sweeps."""
    return replace(config, iterated=replace(config.iterated, **kwargs))
