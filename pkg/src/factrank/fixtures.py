"""Seed-deterministic miniature dataset generator.

Emits a tablestore, question files, lemma dictionary, stopword list, and
an external score file, shaped so that desk-scale tests can exercise the
whole pipeline. Each question carries a term-overlap chain of facts:
hop 1 shares a term with the correct answer, hop h shares a term only
with hop h-1, so facts beyond the first are invisible to one-shot
retrieval but reachable by iterated retrieval. Every question also gets
near-distractor facts that weakly overlap the question text, pinning the
one-shot ranker below a perfect score.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

# Filler words woven into generated texts; the generated stopword file
# contains exactly these.
STOP_FILLERS = ("the", "of", "is", "a", "what", "an", "to")

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"

_NEAR_PER_QUESTION = 2
_NEAR_NOISE_TERMS = 5
_CHOICE_LABELS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class FixtureSpec:
    """Shape of a generated dataset; identical specs yield identical bytes."""

    n_questions: int = 5  # per split
    n_facts: int = 50
    hops: int = 3
    seed: int = 7
    splits: tuple[str, ...] = ("dev",)
    n_noise_terms: int = 40

    def __post_init__(self) -> None:
        if self.n_questions < 1 or self.n_facts < 1:
            raise ValueError("need at least one question and one fact")
        if not 1 <= self.hops <= 16:
            raise ValueError(f"hops must be in 1..16, got {self.hops}")
        if not self.splits:
            raise ValueError("need at least one split")
        if self.reserved_facts > self.n_facts:
            raise ValueError(
                f"layout needs {self.reserved_facts} chain/distractor facts "
                f"but only {self.n_facts} facts were requested")

    @property
    def total_questions(self) -> int:
        return self.n_questions * len(self.splits)

    @property
    def reserved_facts(self) -> int:
        return self.total_questions * (self.hops + _NEAR_PER_QUESTION)


class _WordMint:
    """Unique pronounceable lowercase words; plurals never collide."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used = set(STOP_FILLERS)

    def word(self) -> str:
        while True:
            w = "".join(self.rng.choice(_CONSONANTS) + self.rng.choice(_VOWELS)
                        for _ in range(3))
            if w not in self.used and w + "s" not in self.used:
                self.used.add(w)
                self.used.add(w + "s")
                return w


def _role_for_hop(hop: int, hops: int) -> str:
    if hop == 1:
        return "GROUNDING"
    if hop == hops:
        return "LEXGLUE"
    return "CENTRAL"


def generate(spec: FixtureSpec, out_dir: str | Path) -> None:
    """Write a complete fixture dataset under ``out_dir``."""
    rng = random.Random(spec.seed)
    mint = _WordMint(rng)
    out_dir = Path(out_dir)
    (out_dir / "tables").mkdir(parents=True, exist_ok=True)

    noise_pool = [mint.word() for _ in range(spec.n_noise_terms)]

    def inflect(word: str) -> str:
        # Inflected surface forms exercise the lemma dictionary.
        return word + "s" if rng.random() < 0.4 else word

    chain_rows: list[tuple[str, str, str, str, str, str]] = []
    near_rows: list[tuple[str, str, str, str]] = []
    questions: dict[str, list[tuple[str, str, str, str]]] = {s: [] for s in spec.splits}
    gold_by_qid: dict[str, list[tuple[str, str]]] = {}

    q_index = 0
    for split in spec.splits:
        for _ in range(spec.n_questions):
            qid = f"Q{split[:1].upper()}{q_index:03d}"
            topic_a, topic_b = mint.word(), mint.word()
            links = [mint.word() for _ in range(spec.hops + 1)]

            gold: list[tuple[str, str]] = []
            for hop in range(1, spec.hops + 1):
                uid = f"C-{q_index:03d}-{hop:02d}"
                chain_rows.append(("the", inflect(links[hop - 1]), "is",
                                   inflect(links[hop]), "", uid))
                gold.append((uid, _role_for_hop(hop, spec.hops)))
            for j in range(_NEAR_PER_QUESTION):
                uid = f"D-{q_index:03d}-{j}"
                details = " ".join(inflect(rng.choice(noise_pool))
                                   for _ in range(_NEAR_NOISE_TERMS))
                near_rows.append(("the", inflect(topic_a), details, uid))

            correct_pos = rng.randrange(len(_CHOICE_LABELS))
            choice_texts = []
            for pos in range(len(_CHOICE_LABELS)):
                if pos == correct_pos:
                    choice_texts.append(inflect(links[0]))
                else:
                    choice_texts.append(rng.choice(noise_pool))
            stem = f"what is the {inflect(topic_a)} of the {inflect(topic_b)}?"
            combined = stem + "".join(
                f" ({label}) {text}" for label, text in zip(_CHOICE_LABELS, choice_texts))
            questions[split].append(
                (qid, _CHOICE_LABELS[correct_pos], combined,
                 " ".join(f"{uid}|{role}" for uid, role in gold)))
            gold_by_qid[qid] = gold
            q_index += 1

    noise_rows: list[tuple[str, str, str]] = []
    for j in range(spec.n_facts - spec.reserved_facts):
        uid = f"N-{j:03d}"
        words = [inflect(rng.choice(noise_pool)) for _ in range(3)]
        # Occasional ";"-separated alternatives exercise cell flattening.
        content = (f"{words[0]}; {words[1]} {words[2]}" if j % 7 == 3
                   else " ".join(words))
        noise_rows.append(("a", content, uid))

    _write(out_dir / "tables" / "CHAINS.tsv",
           ["intro\tsubject\trelation\tobject\t[SKIP] COMMENT\t[SKIP] UID"]
           + ["\t".join(row) for row in chain_rows])
    _write(out_dir / "tables" / "DISTRACTORS.tsv",
           ["intro\tsubject\tdetails\t[SKIP] UID"]
           + ["\t".join(row) for row in near_rows])
    _write(out_dir / "tables" / "NOISE.tsv",
           ["intro\tcontent\t[SKIP] UID"]
           + ["\t".join(row) for row in noise_rows])

    for split in spec.splits:
        _write(out_dir / f"questions.{split}.tsv",
               ["QuestionID\tAnswerKey\tquestion\texplanation"]
               + [f"{qid}\t{key}\t{text}\t{gold}"
                  for qid, key, text, gold in questions[split]])

    lemma_lines = sorted(f"{w}s\t{w}" for w in mint.used
                         if not w.endswith("s") and w not in STOP_FILLERS)
    _write(out_dir / "lemmas.tsv", lemma_lines)
    _write(out_dir / "stopwords.txt", list(STOP_FILLERS))

    all_uids = ([row[5] for row in chain_rows] + [row[3] for row in near_rows]
                + [row[2] for row in noise_rows])
    for split in spec.splits:
        lines = ["qid\tuid\tscore"]
        for qid, _, _, _ in questions[split]:
            gold_rank = {uid: hop for hop, (uid, _) in enumerate(gold_by_qid[qid], start=1)}
            for uid in all_uids:
                if uid in gold_rank:
                    score = 100.0 - gold_rank[uid]
                else:
                    score = rng.uniform(0.0, 50.0)
                lines.append(f"{qid}\t{uid}\t{score:.10g}")
        _write(out_dir / f"scores.{split}.tsv", lines)


def _write(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf8")
