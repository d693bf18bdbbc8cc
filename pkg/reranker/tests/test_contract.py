"""The whole point: files this package writes must drop into the engine.

Train and score through this package's CLI, then hand the score file to the
engine's ``rerank-apply`` as a subprocess and require a clean, warning-free
consumption. A learned model that cannot cross this boundary is useless no
matter its loss curve.
"""

import json
import os
import subprocess
import sys

import pytest

from explanation_reranker.corpus_io import read_predictions, read_score_rows

RERANKER = (sys.executable, "-m", "explanation_reranker.cli")


def run_reranker(*args: str) -> subprocess.CompletedProcess:
    proc = subprocess.run([*RERANKER, *args], capture_output=True, text=True)
    assert proc.returncode == 0, f"reranker {args[0]} failed:\n{proc.stderr}"
    return proc


@pytest.fixture(scope="module")
def trained_model(workspace, tiny_model_dir, tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("trained") / "artifact"
    run_reranker("train", "--export", str(workspace.export_file),
                 "--splits", "train", "--out-dir", str(out),
                 "--model", tiny_model_dir, "--epochs", "1",
                 "--learning-rate", "1e-3", "--batch-size", "16",
                 "--max-length", "64", "--candidates", "13", "--seed", "3")
    return str(out)


@pytest.fixture(scope="module")
def scores_file(workspace, trained_model, tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("scores") / "scores.dev.tsv"
    run_reranker("score", "--export", str(workspace.export_file),
                 "--splits", "dev", "--model-dir", trained_model,
                 "--base", str(workspace.base_pred), "--top-n", "64",
                 "--batch-size", "16", "--max-length", "64",
                 "--out", str(out))
    return str(out)


def test_score_file_has_64_rows_per_question(scores_file, corpus):
    rows = read_score_rows(scores_file)
    dev = [q.qid for q in corpus.questions if q.split == "dev"]
    counts: dict[str, int] = {}
    for qid, _, _ in rows:
        counts[qid] = counts.get(qid, 0) + 1
    assert counts == {qid: 64 for qid in dev}


def test_engine_consumes_scores_without_warnings(workspace, engine, scores_file,
                                                 tmp_path):
    reranked_path = tmp_path / "reranked.dev.tsv"
    proc = engine("rerank-apply", "--pred", str(workspace.base_pred),
                  "--scores", scores_file, "--top-n", "64",
                  "--out", str(reranked_path))
    assert "WARNING" not in proc.stderr, proc.stderr

    base = read_predictions(workspace.base_pred)
    reranked = read_predictions(reranked_path)
    scores = {}
    for qid, uid, score in read_score_rows(scores_file):
        scores.setdefault(qid, {})[uid] = score
    assert set(reranked) == set(base)
    for qid, uids in reranked.items():
        assert uids[64:] == base[qid][64:]          # tail untouched
        assert sorted(uids) == sorted(base[qid])    # permutation
        # head reordered by descending score, ties keeping base order
        expected = sorted(base[qid][:64], key=lambda u: -scores[qid][u])
        assert uids[:64] == expected

    report_path = tmp_path / "report.json"
    engine("evaluate", "--data", str(workspace.data_dir), "--split", "dev",
           "--pred", str(reranked_path), "--report-json", str(report_path))
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["map"] <= 1.0


def test_build_targets_cli(workspace, corpus, tmp_path):
    out = tmp_path / "targets.tsv"
    run_reranker("build-targets", "--export", str(workspace.export_file),
                 "--out", str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "qid\tuid\trelevance"
    gold_bearing = sum(1 for q in corpus.questions if q.gold)
    assert len(lines) - 1 == gold_bearing * len(corpus.facts)


def test_cli_data_error_exit_code(workspace, tmp_path, tiny_model_dir):
    proc = subprocess.run(
        [*RERANKER, "score", "--export", str(workspace.export_file),
         "--splits", "dev", "--model-dir", tiny_model_dir,
         "--base", str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "o.tsv")],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert not (tmp_path / "o.tsv").exists()


def test_cli_usage_error_exit_code(workspace, tmp_path):
    proc = subprocess.run(
        [*RERANKER, "train", "--export", str(workspace.export_file),
         "--out-dir", str(tmp_path / "d"), "--epochs", "0"],
        capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([*RERANKER], capture_output=True, text=True)
    assert proc.returncode == 1


REAL_ROOT = os.environ.get("FACTRANK_WORLDTREE")
REAL_MODEL = os.environ.get("RERANKER_MODEL_DIR")


@pytest.mark.skipif(
    not (REAL_ROOT and REAL_MODEL),
    reason="set FACTRANK_WORLDTREE and RERANKER_MODEL_DIR to run")
def test_real_data_reranking_improves_map(engine, tmp_path):
    """Re-ranked dev MAP beats the iterated base; rank-averaging both >= 0.50."""
    export_file = tmp_path / "corpus.jsonl"
    base_pred = tmp_path / "base.tsv"
    engine("export", "--data", REAL_ROOT, "--out", str(export_file))
    engine("rank", "--data", REAL_ROOT, "--split", "dev", "--method", "iterated",
           "--out", str(base_pred))
    scores = tmp_path / "scores.tsv"
    run_reranker("score", "--export", str(export_file), "--splits", "dev",
                 "--model-dir", REAL_MODEL, "--base", str(base_pred),
                 "--out", str(scores))
    reranked = tmp_path / "reranked.tsv"
    engine("rerank-apply", "--pred", str(base_pred), "--scores", str(scores),
           "--out", str(reranked))
    ensembled = tmp_path / "ensembled.tsv"
    engine("ensemble", str(base_pred), str(reranked), "--out", str(ensembled))

    def map_of(pred) -> float:
        report = tmp_path / "report.json"
        engine("evaluate", "--data", REAL_ROOT, "--split", "dev",
               "--pred", str(pred), "--report-json", str(report))
        return json.loads(report.read_text())["map"]

    base_map, reranked_map, ens_map = map(map_of, (base_pred, reranked, ensembled))
    assert reranked_map > base_map, (reranked_map, base_map)
    assert ens_map >= 0.50, ens_map
