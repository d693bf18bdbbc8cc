"""Text normalization feeding the TF-IDF pipeline.

Raw text goes through PTB-style tokenization, lowercasing, punctuation
removal, dictionary lemmatization, and stopword removal. The query side
additionally drops distractor answer choices before any of this runs.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .corpus import LemmaMap, Question

logger = logging.getLogger(__name__)

# A term sequence is an ordered list of normalized terms: lowercase,
# non-empty, stopword-free. Duplicates and order are preserved.
TermSeq = list[str]

# Penn-Treebank tokenization as popularized by the sed script of Robert
# MacIntyre and its well-known Python ports: punctuation is split off,
# contraction clitics are separated ("don't" -> "do", "n't"), double
# quotes become `` / '', hyphenated words stay whole.

_STARTING_QUOTES = [
    (re.compile(r'^\"'), r"``"),
    (re.compile(r"(``)"), r" \1 "),
    (re.compile(r"([ \(\[{<])(\"|\'{2})"), r"\1 `` "),
]

_PUNCTUATION = [
    (re.compile(r"([:,])([^\d])"), r" \1 \2"),
    (re.compile(r"([:,])$"), r" \1 "),
    (re.compile(r"\.\.\."), r" ... "),
    (re.compile(r"[;@#$%&]"), r" \g<0> "),
    # Final period only; sentence-internal periods (abbreviations) stay.
    (re.compile(r'([^\.])(\.)([\]\)}>"\']*)\s*$'), r"\1 \2\3 "),
    (re.compile(r"[?!]"), r" \g<0> "),
    (re.compile(r"([^'])' "), r"\1 ' "),
]

_PARENS_BRACKETS = (re.compile(r"[\]\[\(\)\{\}\<\>]"), r" \g<0> ")

_DOUBLE_DASHES = (re.compile(r"--"), r" -- ")

_ENDING_QUOTES = [
    (re.compile(r'"'), " '' "),
    (re.compile(r"(\S)(\'\')"), r"\1 \2 "),
    (re.compile(r"([^' ])('[sS]|'[mM]|'[dD]|') "), r"\1 \2 "),
    (re.compile(r"([^' ])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T) "), r"\1 \2 "),
]

_CONTRACTIONS = [
    re.compile(r"(?i)\b(can)(not)\b"),
    re.compile(r"(?i)\b(d)('ye)\b"),
    re.compile(r"(?i)\b(gim)(me)\b"),
    re.compile(r"(?i)\b(gon)(na)\b"),
    re.compile(r"(?i)\b(got)(ta)\b"),
    re.compile(r"(?i)\b(lem)(me)\b"),
    re.compile(r"(?i)\b(mor)('n)\b"),
    re.compile(r"(?i)\b(wan)(na)\s"),
]

_CONTRACTIONS_T = [
    re.compile(r"(?i) ('t)(is)\b"),
    re.compile(r"(?i) ('t)(was)\b"),
]


def tokenize(text: str) -> list[str]:
    """Split ``text`` into PTB-style tokens. Total and deterministic."""
    for pattern, repl in _STARTING_QUOTES:
        text = pattern.sub(repl, text)
    for pattern, repl in _PUNCTUATION:
        text = pattern.sub(repl, text)
    text = _PARENS_BRACKETS[0].sub(_PARENS_BRACKETS[1], text)
    text = _DOUBLE_DASHES[0].sub(_DOUBLE_DASHES[1], text)
    text = " " + text + " "
    for pattern, repl in _ENDING_QUOTES:
        text = pattern.sub(repl, text)
    for pattern in _CONTRACTIONS:
        text = pattern.sub(r" \1 \2 ", text)
    for pattern in _CONTRACTIONS_T:
        text = pattern.sub(r" \1 \2 ", text)
    return text.split()


def _is_punctuation(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def preprocess(text: str, lemmas: LemmaMap, stops: set[str]) -> TermSeq:
    """Normalize ``text`` into a term sequence.

    tokenize -> lowercase -> drop pure-punctuation tokens -> lemmatize ->
    drop stopwords. Order and duplicates are preserved. Numbers and
    single-character tokens are kept.
    """
    terms: TermSeq = []
    for token in tokenize(text):
        token = token.lower()
        if _is_punctuation(token):
            continue
        lemma = lemmas.lookup(token)
        if lemma in stops:
            continue
        terms.append(lemma)
    return terms


def question_repr(q: Question, lemmas: LemmaMap, stops: set[str]) -> TermSeq:
    """Term sequence of the question text plus the correct answer only.

    Distractor choices never enter the pipeline. A question without a
    resolvable correct answer falls back to its question text alone.
    """
    answer = q.correct_text
    if answer is None:
        if q.choices:
            logger.warning("question %s: correct answer unresolved, using question text only", q.qid)
        return preprocess(q.question_text, lemmas, stops)
    return preprocess(q.question_text + " " + answer, lemmas, stops)


@dataclass
class Vocabulary:
    """Dense term ids plus document frequencies over the fitted corpus."""

    term_to_id: dict[str, int]
    df: np.ndarray  # int64, df[id] >= 1

    @property
    def size(self) -> int:
        return len(self.term_to_id)

    def id_of(self, term: str) -> int | None:
        return self.term_to_id.get(term)


def build_vocabulary(docs: list[TermSeq]) -> Vocabulary:
    """Assign contiguous ids (first-seen order) and count document frequencies."""
    term_to_id: dict[str, int] = {}
    df_counts: list[int] = []
    n_nonempty = 0
    for doc in docs:
        if not doc:
            continue
        n_nonempty += 1
        seen_here: set[str] = set()
        for term in doc:
            if term in seen_here:
                continue
            seen_here.add(term)
            tid = term_to_id.get(term)
            if tid is None:
                term_to_id[term] = len(df_counts)
                df_counts.append(1)
            else:
                df_counts[tid] += 1
    if n_nonempty == 0:
        raise ValueError("cannot build a vocabulary from an all-empty corpus")
    return Vocabulary(term_to_id, np.asarray(df_counts, dtype=np.int64))
