"""Explanation-fact retrieval for elementary science questions.

Ranks a knowledge base of free-text facts against each question by
TF-IDF cosine, either one-shot or by iteratively absorbing the best fact
into the query vector to follow multi-hop chains, and evaluates rankings
with mean average precision under the absent-fact-at-rank-10^9
convention. See the README for the CLI workflow.
"""

from .corpus import (Fact, FactStore, GoldRef, IngestionError, LemmaMap,
                     Question, Role, WarningRecord)
from .errors import DataError, ScoreFileError
from .evaluation import (ABSENT_RANK, EvalReport, average_precision,
                         evaluate_questions, map_by_gold_length, mean_ap,
                         role_filtered_map)
from .pipeline import DataPaths, Engine, RunConfig, build_engine
from .rankers import (FactIndex, IterConfig, Ranking, apply_external_scores,
                      ensemble_ranks, rank_iterated, rank_optimized)
from .tfidf import (SparseVector, TfidfConfig, TfidfModel, cosine, fit,
                    max_aggregate, scale, transform)

__all__ = [
    "ABSENT_RANK", "DataError", "DataPaths", "Engine", "EvalReport", "Fact",
    "FactIndex", "FactStore", "GoldRef", "IngestionError", "IterConfig",
    "LemmaMap", "Question", "Ranking", "Role", "RunConfig", "ScoreFileError",
    "SparseVector", "TfidfConfig", "TfidfModel", "WarningRecord",
    "apply_external_scores", "average_precision", "build_engine", "cosine",
    "ensemble_ranks", "evaluate_questions", "fit", "map_by_gold_length",
    "mean_ap", "max_aggregate", "rank_iterated", "rank_optimized",
    "role_filtered_map", "scale", "transform",
]

__version__ = "0.1.0"
