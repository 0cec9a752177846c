from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from storychains.corpus import Article, Corpus

T0 = datetime(2013, 4, 15, 12, 0, tzinfo=timezone.utc)


def make_article(aid: str, body: str, title: str = "", hours: float = 0.0, source: str = "bbc") -> Article:
    return Article(aid, source, title, body, T0 + timedelta(hours=hours))


def make_corpus(*articles: Article) -> Corpus:
    return Corpus.from_articles(articles)


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as fh:
            for r in records:
                fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
        return path

    return _write


_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    _ACCEPTANCE.append((report.nodeid.split("::")[-1], "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome}  {name}")
