"""Rankers producing total orderings of the fact store per question.

Two retrieval strategies plus two combinators:

* one-shot ranking by cosine against the question vector;
* iterated ranking that greedily absorbs the closest unused fact into the
  query vector (element-wise max, with per-step decay and an exponential
  down-scaling of the whole vector), simulating hops between facts;
* rank-average ensembling of several rankings;
* re-ranking of a ranking's head by scores from an external model.

Every ranking is a permutation of the store's uids; ties always break by
ascending uid so outputs are reproducible across platforms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .corpus import FactStore
from .errors import DataError, ScoreFileError
from .textproc import TermSeq
from .tfidf import SparseVector, TfidfModel, stack_vectors, transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterConfig:
    """Knobs of the iterated ranker.

    ``decay`` scales the k-th absorbed fact by decay**k before the max
    aggregation; ``downscale_base`` additionally shrinks the whole
    accumulated vector by downscale_base**len(chain) after each step.
    """

    maxlen: int = 128
    decay: float = 0.8
    downscale_base: float = 1.0

    def __post_init__(self) -> None:
        if self.maxlen < 1:
            raise ValueError(f"maxlen must be >= 1, got {self.maxlen}")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        if not 0.0 < self.downscale_base <= 1.0:
            raise ValueError(f"downscale_base must be in (0, 1], got {self.downscale_base}")


@dataclass
class Ranking:
    """Fact uids for one question, most relevant first, covering the store."""

    qid: str
    uids: list[str]


class FactIndex:
    """Precomputed fact vectors packed for fast scoring.

    Rows of ``matrix`` are the facts' tf-idf vectors in store order;
    ``uid_rank[i]`` is the position of fact i when uids are sorted
    ascending (the universal tie-breaker).
    """

    def __init__(self, store: FactStore, vectors: list[SparseVector], size: int,
                 model: TfidfModel | None = None):
        if len(vectors) != len(store):
            raise ValueError("one vector per stored fact required")
        self.store = store
        self.model = model
        self.vectors = vectors
        self.matrix: sparse.csr_matrix = stack_vectors(vectors, size)
        norms = np.sqrt(np.asarray(self.matrix.multiply(self.matrix).sum(axis=1)).ravel())
        self.fact_norms = norms
        order = sorted(range(len(store)), key=store.uids.__getitem__)
        self.uid_rank = np.empty(len(store), dtype=np.int64)
        self.uid_rank[order] = np.arange(len(store), dtype=np.int64)

    @classmethod
    def build(cls, model: TfidfModel, store: FactStore,
              fact_terms: list[TermSeq]) -> "FactIndex":
        vectors = [transform(model, terms) for terms in fact_terms]
        return cls(store, vectors, model.vocab.size, model=model)

    def __len__(self) -> int:
        return len(self.store)

    def cosine_scores(self, v: SparseVector) -> np.ndarray:
        """Exact cosine of every fact against ``v`` (0 where either is empty)."""
        return self._scores(v.to_dense(self.matrix.shape[1]), v.norm())

    def _scores(self, dense: np.ndarray, vnorm: float) -> np.ndarray:
        raw = self.matrix @ dense
        denom = self.fact_norms * vnorm
        out = np.zeros(len(self.store), dtype=np.float64)
        np.divide(raw, denom, out=out, where=denom > 0)
        return out

    def _order(self, scores: np.ndarray) -> np.ndarray:
        """Positions sorted by descending score, ties by ascending uid."""
        return np.lexsort((self.uid_rank, -scores))


def rank_optimized(qid: str, qvec: SparseVector, index: FactIndex) -> Ranking:
    """One-shot ranking of all facts by cosine against the question vector."""
    if qvec.is_empty:
        logger.warning("question %s: empty query vector, falling back to uid order", qid)
        order = np.argsort(index.uid_rank, kind="stable")
    else:
        order = index._order(index.cosine_scores(qvec))
    uids = index.store.uids
    return Ranking(qid, [uids[i] for i in order])


def rank_iterated(qid: str, qvec: SparseVector, index: FactIndex,
                  cfg: IterConfig = IterConfig()) -> Ranking:
    """Greedy chain ranking via iterative max-aggregation of fact vectors.

    Up to ``cfg.maxlen`` times: the unused fact closest to the running
    vector (cosine, ties by uid) is appended to the chain, its vector is
    folded in at weight decay**k, and the whole vector is down-scaled by
    downscale_base**len(chain). The chain heads the ranking in selection
    order; unselected facts follow, ordered by cosine against the final
    vector.
    """
    n = len(index.store)
    steps = min(cfg.maxlen, n)
    size = index.matrix.shape[1]

    # The running vector is kept as exp(log_c) * u. Cosine is invariant
    # under positive scaling so selection uses u alone; the scalar matters
    # only for the max-aggregation ratio, whose dynamic range exceeds
    # float64 once downscale_base < 1 over many steps.
    u = qvec.to_dense(size)
    log_c = 0.0
    u_max = float(u.max(initial=0.0))
    ln_decay = math.log(cfg.decay)
    ln_down = math.log(cfg.downscale_base)

    used = np.zeros(n, dtype=bool)
    chain: list[int] = []
    for k in range(1, steps + 1):
        raw = index.matrix @ u
        scores = np.zeros(n, dtype=np.float64)
        np.divide(raw, index.fact_norms, out=scores, where=index.fact_norms > 0)
        scores[used] = -np.inf
        best_score = scores.max()
        candidates = np.flatnonzero(scores == best_score)
        best = int(candidates[np.argmin(index.uid_rank[candidates])])
        chain.append(best)
        used[best] = True

        fvec = index.vectors[best]
        if not fvec.is_empty:
            log_alpha = k * ln_decay - log_c
            if log_alpha <= 500.0:
                alpha = math.exp(log_alpha) if log_alpha > -745.0 else 0.0
                u[fvec.ids] = np.maximum(u[fvec.ids], alpha * fvec.weights)
                u_max = max(u_max, alpha * float(fvec.weights.max()))
            else:
                # New fact dwarfs the accumulated history: rebase on it.
                u *= math.exp(-log_alpha) if log_alpha < 745.0 else 0.0
                u[fvec.ids] = np.maximum(u[fvec.ids], fvec.weights)
                log_c += log_alpha
                u_max = max(u_max * math.exp(-min(log_alpha, 745.0)),
                            float(fvec.weights.max()))
        log_c += k * ln_down
        if u_max > 1e100:
            u /= u_max
            log_c += math.log(u_max)
            u_max = 1.0

    raw = index.matrix @ u
    final_scores = np.zeros(n, dtype=np.float64)
    np.divide(raw, index.fact_norms, out=final_scores, where=index.fact_norms > 0)
    tail = [int(i) for i in index._order(final_scores) if not used[i]]
    uids = index.store.uids
    return Ranking(qid, [uids[i] for i in chain + tail])


def ensemble_ranks(rankings: list[Ranking]) -> Ranking:
    """Combine rankings of the same question by mean rank.

    Facts are sorted by the arithmetic mean of their 1-based ranks across
    the inputs; ties break by ascending uid. The result is invariant under
    permutation of the input list.
    """
    if len(rankings) < 2:
        raise ValueError("ensembling needs at least two rankings")
    qids = {r.qid for r in rankings}
    if len(qids) != 1:
        raise DataError(f"cannot ensemble rankings of different questions: {sorted(qids)}")
    reference = set(rankings[0].uids)
    for r in rankings[1:]:
        if set(r.uids) != reference:
            diff = sorted(reference.symmetric_difference(r.uids))
            raise DataError(f"mismatched uid sets, symmetric difference: {diff[:10]}"
                            + ("..." if len(diff) > 10 else ""))
    totals: dict[str, int] = {uid: 0 for uid in reference}
    for r in rankings:
        for rank, uid in enumerate(r.uids, start=1):
            totals[uid] += rank
    # Sorting uid-ascending first makes the stable mean-rank sort break
    # ties by uid.
    ordered = sorted(sorted(reference), key=totals.__getitem__)
    return Ranking(rankings[0].qid, ordered)


def apply_external_scores(base: Ranking, scores: dict[str, float],
                          top_n: int = 64) -> Ranking:
    """Reorder the first ``top_n`` entries of ``base`` by external scores.

    Scores must cover every uid in the head; ties keep the base order.
    Positions past ``top_n`` are untouched, so membership of the head set
    never changes.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    if top_n > len(base.uids):
        logger.warning("question %s: top_n=%d exceeds store size %d, clamping",
                       base.qid, top_n, len(base.uids))
        top_n = len(base.uids)
    head = base.uids[:top_n]
    missing = [uid for uid in head if uid not in scores]
    if missing:
        raise ScoreFileError(
            f"question {base.qid}: no external score for top-{top_n} uids {missing[:10]}"
            + ("..." if len(missing) > 10 else ""))
    reordered = sorted(head, key=lambda uid: -scores[uid])
    return Ranking(base.qid, reordered + base.uids[top_n:])


# ---------------------------------------------------------------------------
# File formats: prediction files ("qid<TAB>uid" rows, ranked order, no
# header) and score files ("qid<TAB>uid<TAB>score" rows under a header).

def render_predictions(rankings: list[Ranking]) -> str:
    chunks = []
    for r in rankings:
        chunks.extend(f"{r.qid}\t{uid}" for uid in r.uids)
    return "\n".join(chunks) + ("\n" if chunks else "")


def read_predictions(path) -> list[Ranking]:
    """Read a prediction file, grouping rows into rankings in file order."""
    rankings: list[Ranking] = []
    by_qid: dict[str, Ranking] = {}
    with open(path, encoding="utf8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no}: expected 'qid<TAB>uid', got {line!r}")
            qid, uid = parts
            ranking = by_qid.get(qid)
            if ranking is None:
                ranking = Ranking(qid, [])
                by_qid[qid] = ranking
                rankings.append(ranking)
            ranking.uids.append(uid)
    return rankings


SCORE_FILE_HEADER = "qid\tuid\tscore"


def render_score_file(rows: list[tuple[str, str, float]]) -> str:
    lines = [SCORE_FILE_HEADER]
    lines.extend(f"{qid}\t{uid}\t{score:.10g}" for qid, uid, score in rows)
    return "\n".join(lines) + "\n"


def read_score_file(path) -> dict[str, dict[str, float]]:
    """Read an external score file into qid -> uid -> score."""
    scores: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf8") as fh:
        header = fh.readline().rstrip("\n")
        if [h.strip().lower() for h in header.split("\t")] != ["qid", "uid", "score"]:
            raise ScoreFileError(f"{path}: expected header {SCORE_FILE_HEADER!r}, "
                                 f"got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ScoreFileError(f"{path}:{line_no}: expected 3 columns, got {len(parts)}")
            qid, uid, raw = parts
            try:
                value = float(raw)
            except ValueError as exc:
                raise ScoreFileError(f"{path}:{line_no}: bad score {raw!r}") from exc
            if not math.isfinite(value):
                raise ScoreFileError(f"{path}:{line_no}: non-finite score {raw!r}")
            scores.setdefault(qid, {})[uid] = value
    return scores
