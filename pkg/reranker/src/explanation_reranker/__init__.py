"""Learned re-scoring of explanation candidates behind a TF-IDF retriever.

The retrieval engine exports its preprocessed corpus as JSON lines and its
rankings as prediction TSVs; this package builds soft regression targets from
that export, fine-tunes a transformer with a single-output regression head on
question/explanation text pairs, and emits score files the engine's
``rerank-apply`` command consumes. All coupling is through those file
formats — nothing here imports the engine.
"""

from .corpus_io import (
    Corpus,
    ExportedFact,
    ExportedQuestion,
    RerankerError,
    SCORE_FILE_HEADER,
    SoftTarget,
    read_export,
    read_predictions,
    read_score_rows,
    render_score_file,
    write_score_file,
)
from .modeling import RerankerConfig, load_model, load_tokenizer
from .scoring import score_candidates
from .targets import build_soft_targets, targets_by_question
from .training import TrainPair, make_pairs, train

__all__ = [
    "Corpus",
    "ExportedFact",
    "ExportedQuestion",
    "RerankerConfig",
    "RerankerError",
    "SCORE_FILE_HEADER",
    "SoftTarget",
    "TrainPair",
    "build_soft_targets",
    "load_model",
    "load_tokenizer",
    "make_pairs",
    "read_export",
    "read_predictions",
    "read_score_rows",
    "render_score_file",
    "score_candidates",
    "targets_by_question",
    "train",
    "write_score_file",
]

__version__ = "0.1.0"
