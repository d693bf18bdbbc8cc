"""Engine assembly, path validation, and the vector cache."""

from __future__ import annotations

import pytest

from factrank.corpus import IngestionError
from factrank.pipeline import (DataPaths, RunConfig, build_engine, iterated_with)


def test_datapaths_validate_lists_missing(tmp_path):
    paths = DataPaths.from_root(tmp_path / "nowhere", ("dev",))
    with pytest.raises(IngestionError) as err:
        paths.validate()
    msg = str(err.value)
    assert "tables" in msg and "questions.dev.tsv" in msg


def test_engine_timings_populated(fixture_engine):
    for phase in ("load", "fit", "transform"):
        assert fixture_engine.timings[phase] >= 0.0


def test_rank_split_unknown_method(fixture_engine):
    with pytest.raises(ValueError):
        fixture_engine.rank_split("dev", "fancy")


def test_unknown_split_rejected(fixture_engine):
    with pytest.raises(IngestionError, match="split"):
        fixture_engine.questions_for("test")


def test_gold_sets_mirror_questions(fixture_engine):
    golds = fixture_engine.gold_sets("dev")
    for q in fixture_engine.questions_for("dev"):
        assert golds[q.qid] == set(q.gold_uids)


def test_fit_without_questions_changes_model(fixture_dir):
    paths = DataPaths.from_root(fixture_dir, ("dev",))
    with_q = build_engine(paths, RunConfig(fit_on_questions=True))
    without_q = build_engine(paths, RunConfig(fit_on_questions=False))
    assert with_q.model.n_docs == without_q.model.n_docs + \
        len(with_q.questions_for("dev"))


def test_corrupt_cache_is_silent_miss(fixture_dir, tmp_path, caplog):
    paths = DataPaths.from_root(fixture_dir, ("dev",))
    cache = tmp_path / "cache"
    build_engine(paths, RunConfig(), cache_dir=cache)
    (entry,) = cache.glob("*.npz")
    entry.write_bytes(b"not a numpy archive")
    engine = build_engine(paths, RunConfig(), cache_dir=cache)
    ranked = engine.rank_split("dev", "optimized")
    assert len(ranked) == 5  # recomputed from scratch, no exception


def test_cache_key_tracks_config(fixture_dir, tmp_path):
    paths = DataPaths.from_root(fixture_dir, ("dev",))
    cache = tmp_path / "cache"
    build_engine(paths, RunConfig(), cache_dir=cache)
    from factrank.tfidf import TfidfConfig
    build_engine(paths, RunConfig(tfidf=TfidfConfig(sublinear_tf=True)),
                 cache_dir=cache)
    assert len(list(cache.glob("*.npz"))) == 2


def test_iterated_with_helper():
    cfg = iterated_with(RunConfig(), decay=0.5, maxlen=7)
    assert cfg.iterated.decay == 0.5
    assert cfg.iterated.maxlen == 7
    assert cfg.iterated.downscale_base == 1.0
    assert cfg.tfidf == RunConfig().tfidf
