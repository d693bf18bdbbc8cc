"""Mean average precision scoring of rankings, with role-filtered and
gold-length breakdowns.

Gold facts absent from a prediction are treated as sitting at rank 10^9,
so truncated predictions earn a tiny positive score instead of zeroing
the whole question. The historical zero-on-missing behavior is kept
behind ``missing="zero"`` for regression comparison.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass, field

from .corpus import Question, Role
from .rankers import Ranking

logger = logging.getLogger(__name__)

ABSENT_RANK = 10**9

# Missing-gold policies: the rank-10^9 convention (default) or the legacy
# behavior that zeroes a question when any gold fact is absent.
MISSING_RANK = "rank_1e9"
MISSING_ZERO = "zero"


@dataclass
class EvalReport:
    per_question: dict[str, float]
    map: float
    n_questions: int
    role_map: dict[str, float] = field(default_factory=dict)
    role_counts: dict[str, int] = field(default_factory=dict)
    length_map: dict[int, float] = field(default_factory=dict)
    length_counts: dict[int, int] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    missing_predictions: list[str] = field(default_factory=list)


def average_precision(predicted: Sequence[str] | Ranking, gold: Collection[str],
                      missing: str = MISSING_RANK) -> float:
    """Average precision of the gold facts' positions in a prediction.

    Each gold fact contributes precision at its 1-based rank (the count of
    gold facts at positions up to and including it, divided by the rank).
    Absent gold facts sit at rank 10^9; under ``missing="zero"`` any
    absence zeroes the question instead.
    """
    if isinstance(predicted, Ranking):
        predicted = predicted.uids
    gold_set = set(gold)
    if not gold_set:
        raise ValueError("average_precision needs a non-empty gold set")
    ranks: dict[str, int] = {}
    for pos, uid in enumerate(predicted, start=1):
        if uid in gold_set and uid not in ranks:
            ranks[uid] = pos
    n_absent = len(gold_set) - len(ranks)
    if missing == MISSING_ZERO and n_absent:
        return 0.0
    total = sum((hit + 1) / rank for hit, rank in enumerate(sorted(ranks.values())))
    # All absent facts share rank 10^9, so each sees every gold fact at or
    # before its own rank.
    total += n_absent * (len(gold_set) / ABSENT_RANK)
    return total / len(gold_set)


def mean_ap(rankings: list[Ranking], golds: Mapping[str, Collection[str]],
            missing: str = MISSING_RANK) -> EvalReport:
    """Arithmetic mean of per-question AP over rankings with gold entries."""
    per_question: dict[str, float] = {}
    skipped: list[str] = []
    for ranking in rankings:
        gold = golds.get(ranking.qid)
        if not gold:
            logger.warning("question %s has no gold entry, skipping", ranking.qid)
            skipped.append(ranking.qid)
            continue
        per_question[ranking.qid] = average_precision(ranking.uids, gold, missing)
    overall = sum(per_question.values()) / len(per_question) if per_question else 0.0
    return EvalReport(per_question=per_question, map=overall,
                      n_questions=len(per_question), skipped=skipped)


def role_filtered_map(rankings: list[Ranking], questions: list[Question],
                      role: Role, missing: str = MISSING_RANK) -> float | None:
    """MAP with each gold set reduced to facts annotated with ``role``.

    Predictions are not filtered. Questions whose reduced gold set is
    empty are skipped; if that leaves no questions the result is None,
    not zero.
    """
    by_qid = {q.qid: q for q in questions}
    values = []
    for ranking in rankings:
        q = by_qid.get(ranking.qid)
        if q is None:
            continue
        gold = {ref.uid for ref in q.gold if ref.role is role}
        if not gold:
            continue
        values.append(average_precision(ranking.uids, gold, missing))
    if not values:
        return None
    return sum(values) / len(values)


def map_by_gold_length(rankings: list[Ranking], golds: Mapping[str, Collection[str]],
                       missing: str = MISSING_RANK) -> dict[int, float]:
    """Mean AP per gold-set length; buckets with no questions are omitted."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for ranking in rankings:
        gold = golds.get(ranking.qid)
        if not gold:
            continue
        length = len(set(gold))
        ap = average_precision(ranking.uids, gold, missing)
        sums[length] = sums.get(length, 0.0) + ap
        counts[length] = counts.get(length, 0) + 1
    return {length: sums[length] / counts[length] for length in sorted(sums)}


def evaluate_questions(rankings: list[Ranking], questions: list[Question],
                       missing: str = MISSING_RANK) -> EvalReport:
    """Full evaluation of a prediction set against loaded questions.

    Questions without gold are skipped; questions without a prediction are
    scored against the empty prediction (all gold at rank 10^9) and listed
    in the report.
    """
    by_qid = {r.qid: r for r in rankings}
    per_question: dict[str, float] = {}
    skipped: list[str] = []
    missing_predictions: list[str] = []
    scoreable: list[Question] = []
    scored_rankings: list[Ranking] = []
    for q in questions:
        gold = set(q.gold_uids)
        if not gold:
            logger.warning("question %s has no gold explanation, skipping", q.qid)
            skipped.append(q.qid)
            continue
        ranking = by_qid.get(q.qid)
        if ranking is None:
            missing_predictions.append(q.qid)
            ranking = Ranking(q.qid, [])
        scoreable.append(q)
        scored_rankings.append(ranking)
        per_question[q.qid] = average_precision(ranking.uids, gold, missing)

    overall = sum(per_question.values()) / len(per_question) if per_question else 0.0
    report = EvalReport(per_question=per_question, map=overall,
                        n_questions=len(per_question), skipped=skipped,
                        missing_predictions=missing_predictions)

    roles_present = {ref.role for q in scoreable for ref in q.gold}
    for role in sorted(roles_present, key=lambda r: r.value):
        value = role_filtered_map(scored_rankings, scoreable, role, missing)
        if value is None:
            continue
        report.role_map[role.value] = value
        report.role_counts[role.value] = sum(
            1 for q in scoreable if any(ref.role is role for ref in q.gold))

    golds = {q.qid: q.gold_uids for q in scoreable}
    report.length_map = map_by_gold_length(scored_rankings, golds, missing)
    for q in scoreable:
        length = len(set(q.gold_uids))
        report.length_counts[length] = report.length_counts.get(length, 0) + 1
    return report


# ---------------------------------------------------------------------------
# Report serialization: JSON, a human-readable table, and a per-length CSV
# for plotting score against gold explanation length.

def report_to_json(report: EvalReport) -> str:
    payload = {
        "map": report.map,
        "n_questions": report.n_questions,
        "per_question": report.per_question,
        "role_map": report.role_map,
        "role_counts": report.role_counts,
        "length_map": {str(k): v for k, v in report.length_map.items()},
        "length_counts": {str(k): v for k, v in report.length_counts.items()},
        "skipped": report.skipped,
        "missing_predictions": report.missing_predictions,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> EvalReport:
    payload = json.loads(text)
    return EvalReport(
        per_question=payload["per_question"],
        map=payload["map"],
        n_questions=payload["n_questions"],
        role_map=payload.get("role_map", {}),
        role_counts=payload.get("role_counts", {}),
        length_map={int(k): v for k, v in payload.get("length_map", {}).items()},
        length_counts={int(k): v for k, v in payload.get("length_counts", {}).items()},
        skipped=payload.get("skipped", []),
        missing_predictions=payload.get("missing_predictions", []),
    )


def render_table(report: EvalReport) -> str:
    lines = [
        f"questions scored : {report.n_questions}",
        f"skipped (no gold): {len(report.skipped)}",
        f"missing predictions: {len(report.missing_predictions)}",
        f"MAP              : {report.map:.4f}",
    ]
    if report.role_map:
        lines.append("")
        lines.append(f"{'role':<12} {'MAP':>8} {'questions':>10}")
        for role, value in sorted(report.role_map.items()):
            lines.append(f"{role:<12} {value:>8.4f} {report.role_counts.get(role, 0):>10}")
    if report.length_map:
        lines.append("")
        lines.append(f"{'gold length':<12} {'mean AP':>8} {'questions':>10}")
        for length in sorted(report.length_map):
            lines.append(f"{length:<12} {report.length_map[length]:>8.4f} "
                         f"{report.length_counts.get(length, 0):>10}")
    return "\n".join(lines) + "\n"


def render_lengths_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["gold_length", "n_questions", "mean_ap"])
    for length in sorted(report.length_map):
        writer.writerow([length, report.length_counts.get(length, 0),
                         f"{report.length_map[length]:.6f}"])
    return buf.getvalue()
