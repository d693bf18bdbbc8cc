"""Shared fixtures: a corpus produced by the retrieval engine's own CLI, and
a miniature transformer that trains in seconds with no downloads.

The engine is always driven as a subprocess — the only coupling this package
is allowed is the file formats, and the tests exercise exactly that boundary.
"""

from __future__ import annotations

import re
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

try:
    import torch
    from transformers.utils import logging as hf_logging

    from explanation_reranker.corpus_io import Corpus, read_export
except ModuleNotFoundError:   # package (or its deps) not installed
    collect_ignore_glob = ["*"]
else:
    hf_logging.disable_progress_bar()  # keep save/load bars out of test output

ENGINE = (sys.executable, "-m", "factrank.cli")


def run_engine(*args: str) -> subprocess.CompletedProcess:
    proc = subprocess.run([*ENGINE, *args], capture_output=True, text=True)
    assert proc.returncode == 0, f"engine {args[0]} failed:\n{proc.stderr}"
    return proc


@dataclass(frozen=True)
class Workspace:
    data_dir: Path
    export_file: Path
    base_pred: Path          # iterated ranking of the dev split


@pytest.fixture(scope="session")
def workspace(tmp_path_factory) -> Workspace:
    root = tmp_path_factory.mktemp("engine-data")
    data_dir = root / "data"
    export_file = root / "corpus.jsonl"
    base_pred = root / "base.dev.tsv"
    # 80 facts so a full top-64 head exists; train+dev share the fact store
    run_engine("gen-fixture", "--out", str(data_dir), "--questions", "4",
               "--facts", "80", "--hops", "2", "--seed", "11",
               "--splits", "train,dev")
    run_engine("export", "--data", str(data_dir), "--out", str(export_file))
    run_engine("rank", "--data", str(data_dir), "--split", "dev",
               "--method", "iterated", "--out", str(base_pred))
    return Workspace(data_dir, export_file, base_pred)


@pytest.fixture(scope="session")
def corpus(workspace) -> Corpus:
    return read_export(workspace.export_file)


@pytest.fixture(scope="session")
def engine():
    """Engine CLI as a callable; keeps subprocess plumbing in one place."""
    return run_engine


@pytest.fixture(scope="session")
def dense_corpus(tmp_path_factory) -> Corpus:
    """Small store where lexical neighbors are a large share of the facts.

    80-fact stores drown the per-question distractors in background noise;
    target-distribution tests need overlap to be common, not rare.
    """
    root = tmp_path_factory.mktemp("dense-data")
    data_dir = root / "data"
    export_file = root / "corpus.jsonl"
    run_engine("gen-fixture", "--out", str(data_dir), "--questions", "2",
               "--facts", "20", "--hops", "2", "--seed", "17",
               "--splits", "train,dev")
    run_engine("export", "--data", str(data_dir), "--out", str(export_file))
    return read_export(export_file)


_SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory, corpus) -> str:
    """Untrained Base-architecture model scaled down ~1000x, saved locally.

    Vocabulary is generated from the fixture corpus so nothing is fetched;
    the artifact loads through the same from_pretrained path as a real one.
    """
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

    words: set[str] = set()
    for fact in corpus.facts:
        words.update(re.findall(r"[a-z0-9']+", fact.text.lower()))
    for q in corpus.questions:
        words.update(re.findall(r"[a-z0-9']+", q.pair_text.lower()))
    vocab = list(_SPECIALS) + sorted(words) + ["?", ".", "(", ")", ","]

    out = tmp_path_factory.mktemp("tiny-model")
    vocab_file = out / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    torch.manual_seed(7)
    config = BertConfig(vocab_size=len(vocab), hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=160,
                        num_labels=1)
    model = BertForSequenceClassification(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
