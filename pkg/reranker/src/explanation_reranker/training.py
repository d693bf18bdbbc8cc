"""Fine-tune the regression head on question/explanation pairs.

Each pair is ("question text + correct answer", explanation text) labeled
with its soft relevance; the head's single logit is regressed onto that
label with mean squared error. Regression keeps the graded target
information that a binary relevant/irrelevant split would throw away.

Scoring all ~5k facts against every question would mean ~5k pairs per
question, so training samples the ``candidates_per_question`` facts with the
highest soft relevance and always includes the gold facts on top of that.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict
from typing import NamedTuple

import torch

from .corpus_io import Corpus, RerankerError, SoftTarget
from .modeling import RerankerConfig, load_model, load_tokenizer
from .targets import targets_by_question

logger = logging.getLogger(__name__)


class TrainPair(NamedTuple):
    qid: str
    uid: str
    text_a: str   # question text + correct answer
    text_b: str   # candidate explanation text
    relevance: float


def make_pairs(corpus: Corpus, targets: list[SoftTarget], cfg: RerankerConfig,
               splits: list[str] | None = None) -> list[TrainPair]:
    """Sample training pairs: top candidates by relevance plus all gold."""
    by_question = targets_by_question(targets)
    pairs: list[TrainPair] = []
    for q in corpus.questions_for(splits):
        relevances = by_question.get(q.qid)
        if relevances is None:
            continue  # no targets built (e.g. question had no gold)
        # stable sort keeps fact order for equal relevances -> deterministic
        ranked = sorted(relevances.items(), key=lambda kv: -kv[1])
        keep = [uid for uid, _ in ranked[:cfg.candidates_per_question]]
        kept = set(keep)
        keep.extend(uid for uid in q.gold_uids if uid not in kept)
        for uid in keep:
            fact = corpus.fact_by_uid.get(uid)
            if fact is None:
                raise RerankerError(f"target uid {uid!r} not in export")
            pairs.append(TrainPair(q.qid, uid, q.pair_text, fact.text,
                                   relevances[uid]))
    if not pairs:
        raise RerankerError("no training pairs produced; were targets built "
                            "for these splits?")
    return pairs


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator).tolist()
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train(pairs: list[TrainPair], cfg: RerankerConfig, out_dir,
          model_source: str | None = None, device: str = "cpu") -> dict:
    """Run the fine-tune; save model, tokenizer, and training log to out_dir.

    Returns the training log (per-step and per-epoch mean losses). The log
    file is written last, so its presence marks a complete artifact.
    """
    source = model_source or cfg.model_name
    tokenizer = load_tokenizer(source)
    model = load_model(source).to(device)
    torch.manual_seed(cfg.seed)
    shuffler = torch.Generator().manual_seed(cfg.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    labels = torch.tensor([p.relevance for p in pairs], dtype=torch.float32,
                          device=device)
    model.train()
    steps: list[dict] = []
    epoch_means: list[dict] = []
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        losses: list[float] = []
        for step, batch in enumerate(_batches(len(pairs), cfg.batch_size, shuffler)):
            enc = tokenizer([pairs[i].text_a for i in batch],
                            [pairs[i].text_b for i in batch],
                            truncation=True, padding=True,
                            max_length=cfg.max_length, return_tensors="pt")
            enc = {k: v.to(device) for k, v in enc.items()}
            optimizer.zero_grad()
            logits = model(**enc).logits.squeeze(-1)
            loss = torch.nn.functional.mse_loss(logits, labels[batch])
            loss.backward()
            optimizer.step()
            value = float(loss.detach())
            losses.append(value)
            steps.append({"epoch": epoch, "step": step, "loss": value})
        mean = sum(losses) / len(losses)
        epoch_means.append({"epoch": epoch, "mean_loss": mean})
        logger.info("epoch %d/%d: mean loss %.6f (%d steps)",
                    epoch + 1, cfg.epochs, mean, len(losses))

    log = {
        "config": asdict(cfg),
        "model_source": source,
        "n_pairs": len(pairs),
        "seconds": round(time.perf_counter() - t0, 3),
        "steps": steps,
        "epochs": epoch_means,
    }
    os.makedirs(out_dir, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    with open(os.path.join(out_dir, "training_log.json"), "w", encoding="utf8") as fh:
        json.dump(log, fh, indent=2, sort_keys=True)
    logger.info("saved model artifact to %s", out_dir)
    return log
