"""Sparse TF-IDF vectorization and the vector algebra the rankers need.

Weighting is raw term frequency times smoothed log idf with L2
normalization; idf smoothing and sublinear tf are configurable so the
scheme can be tuned against a development set. Aggregated vectors are
deliberately not re-normalized: cosine divides by the current norms at
comparison time, so the decay scaling applied during iteration survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .textproc import TermSeq, Vocabulary, build_vocabulary


@dataclass(frozen=True)
class TfidfConfig:
    smooth_idf: bool = True
    sublinear_tf: bool = False


@dataclass(frozen=True)
class SparseVector:
    """Term-id -> weight map stored as parallel arrays, ids strictly increasing."""

    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.weights):
            raise ValueError("ids and weights length mismatch")
        if len(self.ids) > 1 and not np.all(np.diff(self.ids) > 0):
            raise ValueError("ids must be strictly increasing")

    @classmethod
    def from_dict(cls, entries: dict[int, float]) -> "SparseVector":
        items = sorted((i, w) for i, w in entries.items() if w != 0.0)
        ids = np.asarray([i for i, _ in items], dtype=np.int64)
        weights = np.asarray([w for _, w in items], dtype=np.float64)
        return cls(ids, weights)

    def to_dict(self) -> dict[int, float]:
        return {int(i): float(w) for i, w in zip(self.ids, self.weights)}

    def to_dense(self, size: int) -> np.ndarray:
        dense = np.zeros(size, dtype=np.float64)
        dense[self.ids] = self.weights
        return dense

    @property
    def nnz(self) -> int:
        return len(self.ids)

    @property
    def is_empty(self) -> bool:
        return len(self.ids) == 0

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def dot(self, other: "SparseVector") -> float:
        if self.is_empty or other.is_empty:
            return 0.0
        _, ia, ib = np.intersect1d(self.ids, other.ids,
                                   assume_unique=True, return_indices=True)
        return float(np.dot(self.weights[ia], other.weights[ib]))


EMPTY_VECTOR = SparseVector()


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity in [0, 1]; 0 if either vector is empty."""
    if a.is_empty or b.is_empty:
        return 0.0
    return a.dot(b) / (a.norm() * b.norm())


def max_aggregate(a: SparseVector, b: SparseVector) -> SparseVector:
    """Element-wise maximum over the union of supports."""
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    ids = np.union1d(a.ids, b.ids)
    weights = np.zeros(len(ids), dtype=np.float64)
    pos_a = np.searchsorted(ids, a.ids)
    weights[pos_a] = a.weights
    pos_b = np.searchsorted(ids, b.ids)
    np.maximum.at(weights, pos_b, b.weights)
    return SparseVector(ids, weights)


def scale(v: SparseVector, factor: float) -> SparseVector:
    """Multiply every weight by a non-negative factor."""
    if factor < 0:
        raise ValueError(f"scale factor must be non-negative, got {factor}")
    if factor == 0 or v.is_empty:
        return EMPTY_VECTOR
    return SparseVector(v.ids, v.weights * factor)


@dataclass
class TfidfModel:
    """Immutable fitted idf table over a vocabulary."""

    vocab: Vocabulary
    idf: np.ndarray  # float64 per term id, > 0
    n_docs: int
    config: TfidfConfig = TfidfConfig()


def fit(docs: list[TermSeq], config: TfidfConfig = TfidfConfig()) -> TfidfModel:
    """Fit idf weights on a corpus of term sequences.

    Smoothed: idf = ln((1 + n) / (1 + df)) + 1; unsmoothed drops the +1
    inside the log. Either way idf > 0 and is non-increasing in df.
    """
    if not docs:
        raise ValueError("cannot fit a TF-IDF model on an empty corpus")
    vocab = build_vocabulary(docs)
    df = vocab.df.astype(np.float64)
    n = len(docs)
    if config.smooth_idf:
        idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    else:
        idf = np.log(n / df) + 1.0
    return TfidfModel(vocab=vocab, idf=idf, n_docs=n, config=config)


def transform(model: TfidfModel, terms: TermSeq) -> SparseVector:
    """L2-normalized tf-idf vector of a term sequence.

    Terms unseen during fit are dropped; an empty or unseen-only input
    yields the empty vector.
    """
    counts: dict[int, int] = {}
    for term in terms:
        tid = model.vocab.id_of(term)
        if tid is not None:
            counts[tid] = counts.get(tid, 0) + 1
    if not counts:
        return EMPTY_VECTOR
    ids = np.asarray(sorted(counts), dtype=np.int64)
    tf = np.asarray([counts[int(i)] for i in ids], dtype=np.float64)
    if model.config.sublinear_tf:
        tf = np.log1p(tf)
    weights = tf * model.idf[ids]
    weights /= math.sqrt(float(np.dot(weights, weights)))
    return SparseVector(ids, weights)


def stack_vectors(vectors: list[SparseVector], size: int) -> sparse.csr_matrix:
    """Stack sparse vectors into one CSR matrix of shape (len(vectors), size)."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([v.nnz for v in vectors])
    if vectors:
        indices = np.concatenate([v.ids for v in vectors])
        data = np.concatenate([v.weights for v in vectors])
    else:
        indices = np.empty(0, dtype=np.int64)
        data = np.empty(0, dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), size))
