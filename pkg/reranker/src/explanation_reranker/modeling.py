"""Model construction and run configuration.

A Base-size encoder (~110M parameters) with a single-output regression head
is the supported model class; larger encoders bought no ranking quality in
our runs, so there is no size switch. ``load_model`` accepts either a hub
name or a local directory, which is also how fine-tuned artifacts re-load.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus_io import RerankerError

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "bert-base-uncased"


@dataclass(frozen=True)
class RerankerConfig:
    model_name: str = DEFAULT_MODEL
    top_n: int = 64              # candidates re-scored per question
    epochs: int = 2
    learning_rate: float = 2e-5
    batch_size: int = 16
    max_length: int = 128        # token-pair truncation length
    candidates_per_question: int = 256  # training pairs sampled per question
    seed: int = 13

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise ValueError(f"top_n must be >= 1, got {self.top_n}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.candidates_per_question < 1:
            raise ValueError("candidates_per_question must be >= 1, got "
                             f"{self.candidates_per_question}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


def load_tokenizer(name_or_path: str):
    from transformers import AutoTokenizer

    try:
        return AutoTokenizer.from_pretrained(name_or_path)
    except (OSError, ValueError) as exc:
        raise RerankerError(
            f"could not load tokenizer {name_or_path!r}: {exc}. "
            "Pass a local artifact directory, or a hub name reachable from "
            "this machine.") from exc


def load_model(name_or_path: str):
    """Sequence-pair encoder with a 1-dimensional regression head."""
    from transformers import AutoModelForSequenceClassification

    try:
        model = AutoModelForSequenceClassification.from_pretrained(
            name_or_path, num_labels=1)
    except (OSError, ValueError) as exc:
        raise RerankerError(
            f"could not load model weights {name_or_path!r}: {exc}. "
            "Pass a local artifact directory, or a hub name reachable from "
            "this machine.") from exc
    n_params = sum(p.numel() for p in model.parameters())
    logger.info("loaded %s (%.1fM parameters)", name_or_path, n_params / 1e6)
    return model
