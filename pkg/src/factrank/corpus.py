"""Ingestion of the semi-structured fact tables, question files, lemma
dictionary, and stopword list into the engine's domain types.

All loaders are deterministic: the same files always produce the same
in-memory objects and the same canonical dumps. Recoverable oddities are
collected as :class:`WarningRecord` entries instead of being silently
dropped; structural problems raise :class:`IngestionError`.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError


class IngestionError(DataError):
    """A data file violates the ingestion contract."""


@dataclass
class WarningRecord:
    """One recoverable ingestion anomaly, serializable as a JSON line."""

    kind: str
    file: str
    detail: str

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "file": self.file, "detail": self.detail})


def write_warnings(records: list[WarningRecord], path: str | Path) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in records), encoding="utf8")


class Role(enum.Enum):
    """Annotated function of a fact within a gold explanation."""

    CENTRAL = "CENTRAL"
    GROUNDING = "GROUNDING"
    LEXGLUE = "LEXGLUE"
    BACKGROUND = "BACKGROUND"
    NEG = "NEG"
    ROLE = "ROLE"
    OTHER = "OTHER"


_ROLE_ALIASES = {
    "CENTRAL": Role.CENTRAL,
    "GROUNDING": Role.GROUNDING,
    "LEXGLUE": Role.LEXGLUE,
    "LEXICALGLUE": Role.LEXGLUE,
    "BACKGROUND": Role.BACKGROUND,
    "NEG": Role.NEG,
    "ROLE": Role.ROLE,
}


def parse_role(raw: str) -> Role:
    """Case-insensitive role lookup; unknown strings map to OTHER."""
    return _ROLE_ALIASES.get(re.sub(r"[^A-Z]", "", raw.upper()), Role.OTHER)


@dataclass(frozen=True)
class GoldRef:
    """A reference from a question to one gold explanation fact."""

    uid: str
    role: Role
    raw_role: str


@dataclass(frozen=True)
class Fact:
    uid: str
    table: str
    text: str


@dataclass
class FactStore:
    """Ordered fact collection with a uid -> position bijection."""

    facts: list[Fact]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {}
        for pos, fact in enumerate(self.facts):
            if fact.uid in self.index:
                raise IngestionError(f"duplicate uid {fact.uid!r} at positions "
                                     f"{self.index[fact.uid]} and {pos}")
            self.index[fact.uid] = pos

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self):
        return iter(self.facts)

    def __contains__(self, uid: str) -> bool:
        return uid in self.index

    @property
    def uids(self) -> list[str]:
        return [f.uid for f in self.facts]

    def get(self, uid: str) -> Fact:
        return self.facts[self.index[uid]]

    def position(self, uid: str) -> int:
        return self.index[uid]


@dataclass
class Question:
    qid: str
    split: str
    question_text: str
    choices: list[tuple[str, str]]
    correct_label: str | None
    gold: list[GoldRef]

    @property
    def correct_text(self) -> str | None:
        """Text of the correct answer choice, or None if unresolved."""
        if self.correct_label is None:
            return None
        for label, text in self.choices:
            if label == self.correct_label:
                return text
        return None

    @property
    def gold_uids(self) -> list[str]:
        return [ref.uid for ref in self.gold]


@dataclass
class LemmaMap:
    """Flat inflected-form -> lemma dictionary with identity fallback."""

    mapping: dict[str, str]
    duplicates: int = 0

    def lookup(self, token: str) -> str:
        token = token.lower()
        return self.mapping.get(token, token)

    def __len__(self) -> int:
        return len(self.mapping)


# Column headers tagged with any of these markers carry bookkeeping data,
# not sentence text. The uid column is the header containing "UID".
_NON_CONTENT_TAGS = ("[SKIP]",)


def _is_content_header(header: str) -> bool:
    stripped = header.strip().upper()
    return not any(stripped.startswith(tag) for tag in _NON_CONTENT_TAGS)


def _row_text(cells: list[str], content_cols: list[int]) -> str:
    parts = []
    for col in content_cols:
        if col >= len(cells):
            continue
        # ";" marks in-cell alternatives; flatten them into plain words.
        cell = " ".join(cells[col].replace(";", " ").split())
        if cell:
            parts.append(cell)
    return " ".join(parts)


def load_tablestore(directory: str | Path,
                    warnings: list[WarningRecord] | None = None) -> FactStore:
    """Load every ``*.tsv`` table in ``directory`` into a FactStore.

    Each data row becomes one fact: the free text is the space-join of its
    non-empty content-column cells in header order, the uid comes from the
    UID column, and the table name is the file stem.
    """
    directory = Path(directory)
    files = sorted(directory.glob("*.tsv"))
    if not files:
        raise IngestionError(f"no .tsv table files found in {directory}")

    facts: list[Fact] = []
    seen: dict[str, tuple[str, int]] = {}
    for path in files:
        lines = path.read_text(encoding="utf8").splitlines()
        if not lines:
            if warnings is not None:
                warnings.append(WarningRecord("empty_table_file", path.name, "no header row"))
            continue
        headers = lines[0].split("\t")
        uid_cols = [i for i, h in enumerate(headers) if "UID" in h.strip().upper()]
        if not uid_cols:
            raise IngestionError(f"{path.name}: no UID column in header")
        uid_col = uid_cols[0]
        content_cols = [i for i, h in enumerate(headers)
                        if i != uid_col and _is_content_header(h)]

        for row_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cells = line.split("\t")
            uid = cells[uid_col].strip() if uid_col < len(cells) else ""
            if not uid:
                raise IngestionError(f"{path.name}:{row_no}: empty uid")
            if uid in seen:
                first_file, first_row = seen[uid]
                raise IngestionError(
                    f"duplicate uid {uid!r}: {first_file}:{first_row} and {path.name}:{row_no}")
            text = _row_text(cells, content_cols)
            if not text:
                raise IngestionError(f"{path.name}:{row_no}: all content cells empty")
            seen[uid] = (path.name, row_no)
            facts.append(Fact(uid=uid, table=path.stem, text=text))
    return FactStore(facts)


# Choice markers: "(A) ..." parenthesized or "A. ..." dotted, letters A-H
# or digits 1-8, as they appear in the question files.
_CHOICE_RE = re.compile(r"\(\s*([A-Ha-h1-8])\s*\)|(?:(?<=\s)|^)([A-H1-8])\.(?=\s)")


def split_choices(text: str) -> tuple[str, list[tuple[str, str]]]:
    """Split a combined question string into stem text and labelled choices."""
    matches = list(_CHOICE_RE.finditer(text))
    if not matches:
        return text.strip(), []
    stem = text[: matches[0].start()].strip()
    choices = []
    for i, m in enumerate(matches):
        label = (m.group(1) or m.group(2)).upper()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        choices.append((label, text[m.end():end].strip()))
    return stem, choices


def _normalize_key(key: str) -> str:
    return key.strip().strip("().").upper()


def _find_column(headers: list[str], names: set[str]) -> int | None:
    lowered = [h.strip().lower() for h in headers]
    for i, h in enumerate(lowered):
        if h in names:
            return i
    return None


def parse_gold_field(raw: str, qid: str, source: str,
                     warnings: list[WarningRecord] | None) -> list[GoldRef]:
    refs: list[GoldRef] = []
    for pair in raw.split():
        uid, sep, role = pair.partition("|")
        if not sep or not uid or not role:
            if warnings is not None:
                warnings.append(WarningRecord("malformed_gold_pair", source, f"{qid}: {pair!r}"))
            continue
        refs.append(GoldRef(uid=uid, role=parse_role(role), raw_role=role))
    return refs


def load_questions(path: str | Path, split: str,
                   warnings: list[WarningRecord] | None = None) -> list[Question]:
    """Load one tab-separated question file for the given split tag."""
    path = Path(path)
    lines = path.read_text(encoding="utf8").splitlines()
    if not lines:
        raise IngestionError(f"{path.name}: empty question file")
    headers = lines[0].split("\t")
    qid_col = _find_column(headers, {"questionid", "question_id", "qid", "id"})
    text_col = _find_column(headers, {"question", "questiontext", "question_text"})
    if qid_col is None or text_col is None:
        raise IngestionError(f"{path.name}: question file needs QuestionID and question columns")
    key_col = _find_column(headers, {"answerkey", "answer_key", "key"})
    gold_col = _find_column(headers, {"explanation", "explanations", "gold"})
    if gold_col is None and warnings is not None:
        warnings.append(WarningRecord("no_gold_column", path.name, "gold fields default to empty"))

    questions: list[Question] = []
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if qid_col >= len(cells) or text_col >= len(cells):
            if warnings is not None:
                warnings.append(WarningRecord("malformed_row", path.name, f"row {row_no}"))
            continue
        qid = cells[qid_col].strip()
        stem, choices = split_choices(cells[text_col])
        raw_key = cells[key_col].strip() if key_col is not None and key_col < len(cells) else ""
        correct: str | None = None
        if raw_key:
            key = _normalize_key(raw_key)
            if any(label == key for label, _ in choices):
                correct = key
            elif warnings is not None:
                warnings.append(WarningRecord(
                    "answer_key_unmatched", path.name,
                    f"{qid}: key {raw_key!r} not among {[l for l, _ in choices]}"))
        raw_gold = cells[gold_col].strip() if gold_col is not None and gold_col < len(cells) else ""
        gold = parse_gold_field(raw_gold, qid, path.name, warnings)
        questions.append(Question(qid=qid, split=split, question_text=stem,
                                  choices=choices, correct_label=correct, gold=gold))
    return questions


def resolve_gold(questions: list[Question], store: FactStore,
                 warnings: list[WarningRecord] | None = None) -> tuple[int, int]:
    """Check every gold uid against the store.

    Returns (resolved, unresolved) counts; unresolved refs are reported,
    never dropped, so resolved + unresolved equals the total reference count.
    """
    resolved = unresolved = 0
    for q in questions:
        for ref in q.gold:
            if ref.uid in store:
                resolved += 1
            else:
                unresolved += 1
                if warnings is not None:
                    warnings.append(WarningRecord("unresolved_gold", "", f"{q.qid}: {ref.uid}"))
    return resolved, unresolved


def load_lemmas(path: str | Path, order: str = "inflected_first",
                warnings: list[WarningRecord] | None = None) -> LemmaMap:
    """Load a flat lemma dictionary, one mapping per line.

    ``order`` selects the column layout: "inflected_first" reads
    ``inflected<sep>lemma``, "lemma_first" the reverse (the layout of the
    dataset-provided file). The separator (tab or comma) is detected from
    the first non-blank line.
    """
    if order not in ("inflected_first", "lemma_first"):
        raise ValueError(f"unknown lemma column order {order!r}")
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf8").splitlines() if ln.strip()]
    sep = "\t"
    for ln in lines:  # first line showing a separator decides the format
        if "\t" in ln:
            break
        if "," in ln:
            sep = ","
            break
    mapping: dict[str, str] = {}
    duplicates = 0
    for line in lines:
        parts = [p.strip().lower() for p in line.split(sep)]
        if len(parts) < 2 or not parts[0] or not parts[1]:
            if warnings is not None:
                warnings.append(WarningRecord("malformed_lemma_line", path.name, line[:80]))
            continue
        key, value = (parts[0], parts[1]) if order == "inflected_first" else (parts[1], parts[0])
        if key in mapping:
            duplicates += 1
        mapping[key] = value
    return LemmaMap(mapping, duplicates)


def load_stopwords(path: str | Path) -> set[str]:
    """Load a one-token-per-line stopword file into a lowercase set."""
    return {line.strip().lower()
            for line in Path(path).read_text(encoding="utf8").splitlines()
            if line.strip()}


def dump_canonical(store: FactStore) -> str:
    """Canonical TSV dump of a store; loads back via :func:`load_canonical`."""
    lines = ["uid\ttable\ttext"]
    lines.extend(f"{f.uid}\t{f.table}\t{f.text}" for f in store)
    return "\n".join(lines) + "\n"


def load_canonical(path: str | Path) -> FactStore:
    lines = Path(path).read_text(encoding="utf8").splitlines()
    if not lines or lines[0] != "uid\ttable\ttext":
        raise IngestionError(f"{Path(path).name}: not a canonical store dump")
    facts = []
    for line in lines[1:]:
        if not line.strip():
            continue
        uid, table, text = line.split("\t", 2)
        facts.append(Fact(uid=uid, table=table, text=text))
    return FactStore(facts)
