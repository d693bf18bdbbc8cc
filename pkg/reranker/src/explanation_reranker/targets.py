"""Soft regression targets from TF-IDF similarity.

Hard 0/1 labels waste the graded structure of the task: facts that share
vocabulary with a question's gold explanation are *nearly* relevant and
should not be pushed to zero. So each training fact gets a continuous
relevance — the cosine TF-IDF similarity between the fact and the
concatenation of question text, correct answer, and all gold explanation
texts. Gold facts land near the top by construction; lexically adjacent
facts form a soft tail above zero.

The term sequences come from the engine's export file, so tokenization,
lemmatization, and stopword removal are exactly what the retriever used —
the vectorizer below never re-tokenizes.
"""

from __future__ import annotations

import logging

from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.metrics.pairwise import linear_kernel

from .corpus_io import Corpus, ExportedQuestion, RerankerError, SoftTarget

logger = logging.getLogger(__name__)


def _identity(terms):
    # corpus/targets are already tokenized term sequences
    return terms


def _target_terms(question: ExportedQuestion, corpus: Corpus) -> list[str]:
    """Question + answer terms followed by every gold fact's terms."""
    terms = list(question.terms)
    for uid in question.gold_uids:
        fact = corpus.fact_by_uid.get(uid)
        if fact is None:
            raise RerankerError(f"question {question.qid}: gold uid {uid!r} "
                                "not present in export")
        terms.extend(fact.terms)
    return terms


def build_soft_targets(corpus: Corpus,
                       splits: list[str] | None = None) -> list[SoftTarget]:
    """Relevance of every fact to every (gold-bearing) question of ``splits``.

    Questions without gold cannot define a target document and are skipped
    with a log line. Output order: question order, then fact order; one
    entry per (question, fact) pair, relevance in [0, 1].
    """
    questions = [q for q in corpus.questions_for(splits)]
    usable: list[ExportedQuestion] = []
    for q in questions:
        if q.gold:
            usable.append(q)
        else:
            logger.warning("question %s has no gold explanation, skipped", q.qid)
    if not usable:
        raise RerankerError("no question with gold explanations in "
                            f"splits {splits!r}")

    vectorizer = TfidfVectorizer(analyzer=_identity, norm="l2")
    fact_matrix = vectorizer.fit_transform([list(f.terms) for f in corpus.facts])
    target_matrix = vectorizer.transform(
        [_target_terms(q, corpus) for q in usable])
    sims = linear_kernel(target_matrix, fact_matrix)  # rows L2-normalized -> cosine

    out: list[SoftTarget] = []
    for qi, q in enumerate(usable):
        row = sims[qi]
        out.extend(SoftTarget(q.qid, fact.uid, float(row[fi]))
                   for fi, fact in enumerate(corpus.facts))
    logger.info("built %d soft targets for %d questions x %d facts",
                len(out), len(usable), len(corpus.facts))
    return out


def targets_by_question(targets: list[SoftTarget]) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for t in targets:
        out.setdefault(t.qid, {})[t.uid] = t.relevance
    return out
