"""Fielded inverted index, BM25F scoring and Bo1 query expansion.

Scoring follows the fielded BM25F form: per-field counts are boosted and
length-normalised, accumulated into one pseudo-frequency ``w(t, d)``, then
saturated as ``w / (k1 + w)`` and weighted by a floored Robertson idf.
"""

from __future__ import annotations

import math
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import FIELDS, Corpus, CorpusStats

CACHE_VERSION = 1


@dataclass(frozen=True)
class BM25FParams:
    k1: float = 1.2
    b: dict[str, float] = field(default_factory=lambda: {"title": 1.0, "body": 1.0})
    boost: dict[str, float] = field(default_factory=lambda: {"title": 2.0, "body": 1.0})
    idf_log_base: float = math.e
    bo1_log_base: float = 2.0

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        for f in FIELDS:
            b = self.b.get(f)
            if b is None or not 0 < b <= 1:
                raise ValueError(f"b[{f}] must lie in (0, 1], got {b}")
            boost = self.boost.get(f)
            if boost is None or not boost > 0:
                raise ValueError(f"boost[{f}] must be positive, got {boost}")
        for name in ("idf_log_base", "bo1_log_base"):
            base = getattr(self, name)
            if not base > 1:
                raise ValueError(f"{name} must exceed 1, got {base}")


@dataclass(frozen=True)
class ExpandedQuery:
    article_id: str
    terms: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class FieldedIndex:
    """Per-term, per-field postings (doc position -> count) with the scoring parameters."""

    stats: CorpusStats
    params: BM25FParams
    postings: dict[str, dict[str, dict[int, int]]]
    ids: tuple[str, ...]

    @property
    def n_docs(self) -> int:
        return self.stats.n_docs

    def doc_freq(self, term: str) -> int:
        return self.stats.doc_freq.get(term, 0)

    def lookup(self, term: str, field: str) -> dict[int, int]:
        return self.postings.get(term, {}).get(field, {})

    def idf(self, term: str) -> float:
        """Robertson idf, floored at zero so common terms never count against a match."""
        n, df = self.n_docs, self.doc_freq(term)
        raw = math.log((n - df + 0.5) / (df + 0.5), self.params.idf_log_base)
        return max(0.0, raw)

    def field_norm(self, doc: int, field: str) -> float:
        b = self.params.b[field]
        avl = self.stats.avg_field_length[field]
        l = self.stats.field_lengths[field][doc]
        return (1.0 - b) + b * (l / avl if avl > 0 else 0.0)

    def term_weight(self, term: str, doc: int) -> float:
        """Boosted, length-normalised pseudo-frequency of ``term`` accumulated over fields."""
        w = 0.0
        fields = self.postings.get(term)
        if not fields:
            return 0.0
        for f, plist in fields.items():
            occ = plist.get(doc, 0)
            if occ:
                w += occ * self.params.boost[f] / self.field_norm(doc, f)
        return w


def build_index(corpus: Corpus, stats: CorpusStats, params: BM25FParams | None = None) -> FieldedIndex:
    params = params or BM25FParams()
    postings: dict[str, dict[str, dict[int, int]]] = {}
    for f in FIELDS:
        for doc, counts in enumerate(stats.field_counts[f]):
            for term, c in counts.items():
                postings.setdefault(term, {}).setdefault(f, {})[doc] = c
    return FieldedIndex(stats=stats, params=params, postings=postings, ids=tuple(corpus.ids))


def bo1_weight(tf: int, term_total: int, n_docs: int, base: float = 2.0) -> float:
    """Bose-Einstein (Bo1) informativeness of a term with in-document frequency ``tf``."""
    lam = term_total / n_docs
    return tf * math.log((1.0 + lam) / lam, base) + math.log(1.0 + lam, base)


def bo1_expand(doc: int, index: FieldedIndex, n_terms: int = 20) -> ExpandedQuery:
    stats = index.stats
    counts = stats.doc_counts(doc)
    base = index.params.bo1_log_base
    weighted = [
        (t, bo1_weight(tf, stats.term_totals[t], stats.n_docs, base)) for t, tf in counts.items()
    ]
    weighted.sort(key=lambda tw: (-tw[1], tw[0]))
    return ExpandedQuery(index.ids[doc], tuple(weighted[:n_terms]))


def bm25f_score(query: ExpandedQuery, doc: int, index: FieldedIndex) -> float:
    k1 = index.params.k1
    score = 0.0
    for term, qw in query.terms:
        idf = index.idf(term)
        if idf == 0.0:
            continue
        w = index.term_weight(term, doc)
        if w:
            score += idf * w / (k1 + w) * qw
    return score


def normalized_bm25f(
    a: int, b: int, index: FieldedIndex, query: ExpandedQuery | None = None, n_terms: int = 20
) -> float:
    """Score of b against a's expanded query, relative to a's score against itself."""
    if query is None:
        query = bo1_expand(a, index, n_terms)
    self_score = bm25f_score(query, a, index)
    if self_score <= 0.0:
        return 0.0
    return min(1.0, max(0.0, bm25f_score(query, b, index) / self_score))


@dataclass(frozen=True)
class ScoringMatrices:
    """Sparse forms for bulk scoring.

    ``saturation[d, t]`` holds ``idf(t) * w(t,d) / (k1 + w(t,d))`` and
    ``queries[d, t]`` the expanded-query weight of t for document d, so
    ``queries[a] @ saturation[b].T`` is ``bm25f_score(query(a), b)``.
    """

    vocabulary: dict[str, int]
    saturation: sp.csr_matrix
    queries: sp.csr_matrix
    self_scores: np.ndarray


def scoring_matrices(index: FieldedIndex, n_terms: int = 20) -> ScoringMatrices:
    stats = index.stats
    k1 = index.params.k1
    vocab = {t: i for i, t in enumerate(sorted(stats.term_totals))}
    idf = np.array([index.idf(t) for t in vocab])

    rows, cols, vals = [], [], []
    for doc in range(stats.n_docs):
        for term in sorted(stats.doc_counts(doc)):
            j = vocab[term]
            if idf[j] == 0.0:
                continue
            w = index.term_weight(term, doc)
            rows.append(doc)
            cols.append(j)
            vals.append(idf[j] * w / (k1 + w))
    shape = (stats.n_docs, len(vocab))
    sat = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.float64)

    rows, cols, vals = [], [], []
    for doc in range(stats.n_docs):
        for term, qw in bo1_expand(doc, index, n_terms).terms:
            rows.append(doc)
            cols.append(vocab[term])
            vals.append(qw)
    q = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.float64)
    self_scores = np.asarray(q.multiply(sat).sum(axis=1)).ravel()
    return ScoringMatrices(vocab, sat, q, self_scores)


def save_index(index: FieldedIndex, path: str | Path, fingerprint: str) -> None:
    with open(path, "wb") as fh:
        pickle.dump({"version": CACHE_VERSION, "fingerprint": fingerprint, "index": index}, fh,
                    protocol=pickle.HIGHEST_PROTOCOL)


def load_index(path: str | Path, fingerprint: str) -> FieldedIndex | None:
    """Return the cached index, or None when absent, stale or from another cache version."""
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError, AttributeError):
        return None
    if not isinstance(payload, dict) or payload.get("version") != CACHE_VERSION:
        return None
    if payload.get("fingerprint") != fingerprint:
        return None
    return payload["index"]
