"""File-format boundary with the retrieval engine.

Three formats cross it: the engine's corpus export (JSON lines, facts then
questions), its prediction files (``qid<TAB>uid`` rows in rank order, no
header), and the score file this package emits (``qid<TAB>uid<TAB>score``
under a fixed header). The grammars are small and frozen, so they are
re-implemented here rather than imported — the two packages share files,
not code.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class RerankerError(Exception):
    """Bad input data, missing model artifacts, or broken contracts."""


@dataclass(frozen=True)
class ExportedFact:
    uid: str
    table: str
    text: str
    terms: tuple[str, ...]


@dataclass(frozen=True)
class ExportedQuestion:
    qid: str
    split: str
    text: str
    answer: str
    terms: tuple[str, ...]
    gold: tuple[tuple[str, str], ...]  # (uid, role) pairs

    @property
    def gold_uids(self) -> tuple[str, ...]:
        return tuple(uid for uid, _ in self.gold)

    @property
    def pair_text(self) -> str:
        """Left side of every scored pair: question followed by its answer."""
        return f"{self.text} {self.answer}".strip()


class SoftTarget(NamedTuple):
    qid: str
    uid: str
    relevance: float


@dataclass
class Corpus:
    facts: list[ExportedFact]
    questions: list[ExportedQuestion]
    fact_by_uid: dict[str, ExportedFact] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.fact_by_uid:
            self.fact_by_uid = {f.uid: f for f in self.facts}

    def questions_for(self, splits: Iterable[str] | None) -> list[ExportedQuestion]:
        if splits is None:
            return list(self.questions)
        wanted = set(splits)
        unknown = wanted - {q.split for q in self.questions}
        if unknown:
            have = sorted({q.split for q in self.questions})
            raise RerankerError(f"splits {sorted(unknown)} not in export (have {have})")
        return [q for q in self.questions if q.split in wanted]


def _require(record: dict, keys: tuple[str, ...], path, line_no: int) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise RerankerError(f"{path}:{line_no}: record missing keys {missing}")


def read_export(path) -> Corpus:
    """Parse the engine's corpus export (one JSON object per line)."""
    facts: list[ExportedFact] = []
    questions: list[ExportedQuestion] = []
    seen_uids: set[str] = set()
    seen_qids: set[str] = set()
    with open(path, encoding="utf8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RerankerError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            kind = record.get("kind")
            if kind == "fact":
                _require(record, ("uid", "table", "text", "terms"), path, line_no)
                if record["uid"] in seen_uids:
                    raise RerankerError(f"{path}:{line_no}: duplicate fact uid "
                                        f"{record['uid']!r}")
                seen_uids.add(record["uid"])
                facts.append(ExportedFact(record["uid"], record["table"],
                                          record["text"], tuple(record["terms"])))
            elif kind == "question":
                _require(record, ("qid", "split", "text", "answer", "terms", "gold"),
                         path, line_no)
                if record["qid"] in seen_qids:
                    raise RerankerError(f"{path}:{line_no}: duplicate question id "
                                        f"{record['qid']!r}")
                seen_qids.add(record["qid"])
                gold = tuple((g["uid"], g["role"]) for g in record["gold"])
                questions.append(ExportedQuestion(
                    record["qid"], record["split"], record["text"],
                    record["answer"], tuple(record["terms"]), gold))
            else:
                raise RerankerError(f"{path}:{line_no}: unknown record kind {kind!r}")
    if not facts:
        raise RerankerError(f"{path}: export contains no facts")
    return Corpus(facts, questions)


def read_predictions(path) -> dict[str, list[str]]:
    """Prediction file -> qid -> uids in rank order (file order preserved)."""
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise RerankerError(f"{path}:{line_no}: expected 'qid<TAB>uid', "
                                    f"got {line!r}")
            out.setdefault(parts[0], []).append(parts[1])
    if not out:
        raise RerankerError(f"{path}: empty prediction file")
    return out


SCORE_FILE_HEADER = "qid\tuid\tscore"


def render_score_file(rows: Iterable[tuple[str, str, float]]) -> str:
    lines = [SCORE_FILE_HEADER]
    for qid, uid, score in rows:
        if not math.isfinite(score):
            raise RerankerError(f"non-finite score {score!r} for {qid}/{uid}")
        lines.append(f"{qid}\t{uid}\t{score:.10g}")
    return "\n".join(lines) + "\n"


def write_score_file(path, rows: Iterable[tuple[str, str, float]]) -> None:
    """Atomic write: the file appears complete or not at all."""
    text = render_score_file(rows)
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_score_rows(path) -> list[tuple[str, str, float]]:
    """Inverse of render_score_file; used for round-trip checks."""
    rows: list[tuple[str, str, float]] = []
    with open(path, encoding="utf8") as fh:
        header = fh.readline().rstrip("\n")
        if header != SCORE_FILE_HEADER:
            raise RerankerError(f"{path}: expected header {SCORE_FILE_HEADER!r}, "
                                f"got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise RerankerError(f"{path}:{line_no}: expected 3 columns")
            rows.append((parts[0], parts[1], float(parts[2])))
    return rows
