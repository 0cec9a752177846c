"""Distinctive-keyword scoring and keyword-overlap similarity."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import CorpusStats

DEFAULT_TOP_K = 100
DEFAULT_MIN_SCORE = 100.0


@dataclass(frozen=True)
class KeywordProfile:
    article_id: str
    keywords: tuple[tuple[str, float], ...]

    @property
    def terms(self) -> frozenset[str]:
        return frozenset(t for t, _ in self.keywords)

    def __len__(self) -> int:
        return len(self.keywords)


def kwscore(term: str, doc: int, stats: CorpusStats, doc_total: int | None = None) -> float:
    """Relative frequency of ``term`` in ``doc`` over its relative frequency in the corpus.

    Returns 0 when the term does not occur in the document (or the corpus).
    """
    count = sum(stats.field_counts[f][doc].get(term, 0) for f in stats.field_counts)
    corpus_count = stats.term_totals.get(term, 0)
    if count == 0 or corpus_count == 0:
        return 0.0
    if doc_total is None:
        doc_total = stats.doc_length(doc)
    return (count / doc_total) / (corpus_count / stats.total_tokens)


def keyword_profile(
    doc: int,
    stats: CorpusStats,
    article_id: str,
    k: int = DEFAULT_TOP_K,
    min_score: float = DEFAULT_MIN_SCORE,
) -> KeywordProfile:
    counts = stats.doc_counts(doc)
    total = sum(counts.values())
    scored = []
    for term in counts:
        s = kwscore(term, doc, stats, doc_total=total)
        if s > min_score:
            scored.append((term, s))
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return KeywordProfile(article_id, tuple(scored[:k]))


def keyword_similarity(a: KeywordProfile, b: KeywordProfile) -> float:
    """Share of keywords common to both profiles, relative to the shorter one."""
    if not a.keywords or not b.keywords:
        return 0.0
    shared = len(a.terms & b.terms)
    return shared / min(len(a), len(b))


def write_profiles(profiles: Iterable[KeywordProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in profiles:
            cells = [p.article_id] + [f"{t}:{s:.6g}" for t, s in p.keywords]
            fh.write("\t".join(cells) + "\n")
