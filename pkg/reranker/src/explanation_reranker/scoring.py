"""Score the head of a base ranking with a trained model.

The TF-IDF retriever already orders the full fact store per question; only
its top ``top_n`` candidates are re-scored here (the tail is where the
retriever is mostly right anyway, and scoring all facts with a transformer
is quadratically more expensive). Output rows carry the model's raw logit —
what matters downstream is the induced order, not the scale.
"""

from __future__ import annotations

import logging

import torch

from .corpus_io import Corpus, RerankerError
from .modeling import RerankerConfig, load_model, load_tokenizer

logger = logging.getLogger(__name__)


def score_candidates(model_dir, corpus: Corpus,
                     base_predictions: dict[str, list[str]],
                     cfg: RerankerConfig = RerankerConfig(),
                     splits: list[str] | None = None,
                     device: str = "cpu") -> list[tuple[str, str, float]]:
    """Rows (qid, uid, score) for the top ``cfg.top_n`` of each base ranking.

    Every question of ``splits`` must appear in the base prediction file;
    exactly min(top_n, |base ranking|) rows come out per question, in base
    order. Deterministic for a fixed artifact (the model runs in eval mode,
    no sampling anywhere).
    """
    questions = corpus.questions_for(splits)
    if not questions:
        raise RerankerError(f"no questions in splits {splits!r}")
    missing = [q.qid for q in questions if q.qid not in base_predictions]
    if missing:
        raise RerankerError("base prediction file is missing questions: "
                            f"{missing[:10]}{'...' if len(missing) > 10 else ''}")

    tokenizer = load_tokenizer(model_dir)
    model = load_model(model_dir).to(device)
    model.eval()

    rows: list[tuple[str, str, float]] = []
    with torch.no_grad():
        for q in questions:
            head = base_predictions[q.qid][:cfg.top_n]
            texts = []
            for uid in head:
                fact = corpus.fact_by_uid.get(uid)
                if fact is None:
                    raise RerankerError(f"question {q.qid}: base ranking uid "
                                        f"{uid!r} not in export")
                texts.append(fact.text)
            scores: list[float] = []
            for start in range(0, len(head), cfg.batch_size):
                chunk = texts[start:start + cfg.batch_size]
                enc = tokenizer([q.pair_text] * len(chunk), chunk,
                                truncation=True, padding=True,
                                max_length=cfg.max_length, return_tensors="pt")
                enc = {k: v.to(device) for k, v in enc.items()}
                logits = model(**enc).logits.squeeze(-1)
                scores.extend(float(v) for v in logits)
            rows.extend((q.qid, uid, score) for uid, score in zip(head, scores))
    logger.info("scored %d rows over %d questions (top_n=%d)",
                len(rows), len(questions), cfg.top_n)
    return rows
