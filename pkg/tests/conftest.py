"""Shared fixtures: a generated miniature dataset, an engine built on it,
and the acceptance-verdict plumbing that prints one PASS/FAIL/SKIP line
per acceptance criterion at the end of the run."""

from __future__ import annotations

import pytest

from factrank.corpus import LemmaMap
from factrank.fixtures import FixtureSpec, generate
from factrank.pipeline import DataPaths, RunConfig, build_engine

_ACCEPTANCE_LINES: list[str] = []


class _Verdict:
    """Records acceptance outcomes for the end-of-run summary."""

    def ok(self, label: str, passed: bool, detail: str = "") -> None:
        line = f"{'PASS' if passed else 'FAIL'}: {label}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        assert passed, line

    def skip(self, label: str, reason: str) -> None:
        _ACCEPTANCE_LINES.append(f"SKIP: {label} ({reason})")
        pytest.skip(reason)


@pytest.fixture()
def verdict():
    return _Verdict()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "fx"
    generate(FixtureSpec(n_questions=5, n_facts=50, hops=3, seed=7), out)
    return out


@pytest.fixture(scope="session")
def fixture_engine(fixture_dir):
    paths = DataPaths.from_root(fixture_dir, ("dev",))
    return build_engine(paths, RunConfig())


@pytest.fixture()
def tiny_lemmas():
    return LemmaMap({"mice": "mouse", "snakes": "snake", "lives": "live",
                     "grasses": "grass", "better": "good"})


@pytest.fixture()
def tiny_stops():
    return {"the", "a", "an", "of", "is", "in", "to", "and", "what"}
