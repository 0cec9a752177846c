"""Windowed pair scoring and construction of the directed similarity network."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, CorpusStats
from .keywords import DEFAULT_MIN_SCORE, DEFAULT_TOP_K, KeywordProfile, keyword_profile, keyword_similarity
from .retrieval import (
    BM25FParams,
    ExpandedQuery,
    FieldedIndex,
    ScoringMatrices,
    bm25f_score,
    bo1_expand,
    build_index,
    scoring_matrices,
)

log = logging.getLogger(__name__)

DAY = 86_400
DEFAULT_THRESHOLD = 0.35
CALIBRATION_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
CLASSIFIERS = ("keyword", "bm25f", "ensemble")


@dataclass(frozen=True)
class SimilarityEdge:
    source: str
    target: str
    keyword: float
    bm25f: float
    ensemble: float
    related: bool = True


@dataclass(frozen=True)
class SimilarityNetwork:
    nodes: tuple[str, ...]
    edges: tuple[SimilarityEdge, ...]

    @classmethod
    def from_weighted_edges(
        cls, nodes: Iterable[str], edges: Iterable[tuple[str, str, float]]
    ) -> "SimilarityNetwork":
        """Build a network from plain (source, target, weight) triples."""
        es = tuple(SimilarityEdge(u, v, 0.0, 0.0, float(w)) for u, v, w in edges)
        return cls(tuple(nodes), es)

    def write_edges(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.edges:
                fh.write(f"{e.source}\t{e.target}\t{e.keyword:.6f}\t{e.bm25f:.6f}\t{e.ensemble:.6f}\n")


@dataclass(frozen=True)
class Thresholds:
    keyword: float = DEFAULT_THRESHOLD
    bm25f: float = DEFAULT_THRESHOLD
    ensemble: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        for name in CLASSIFIERS:
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"threshold {name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class SimilarityParams:
    window_days: float = 3.0
    top_k: int = DEFAULT_TOP_K
    min_score: float = DEFAULT_MIN_SCORE
    expansion_terms: int = 20
    bm25f: BM25FParams = field(default_factory=BM25FParams)
    thresholds: Thresholds = field(default_factory=Thresholds)
    workers: int = 1

    @property
    def window_seconds(self) -> int:
        return int(round(self.window_days * DAY))


@dataclass(frozen=True)
class PairScore:
    keyword: float
    bm25f_ab: float
    bm25f_ba: float

    @property
    def ensemble_ab(self) -> float:
        return (self.keyword + self.bm25f_ab) / 2

    @property
    def ensemble_ba(self) -> float:
        return (self.keyword + self.bm25f_ba) / 2

    @property
    def bm25f(self) -> float:
        """Symmetrised normalised BM25F, the signal the BM25F classifier thresholds."""
        return (self.bm25f_ab + self.bm25f_ba) / 2

    @property
    def symmetric(self) -> float:
        return (self.ensemble_ab + self.ensemble_ba) / 2

    def classifier_score(self, name: str) -> float:
        return {"keyword": self.keyword, "bm25f": self.bm25f, "ensemble": self.symmetric}[name]


def window_pairs(timestamps: Sequence[int], window_seconds: int) -> Iterator[tuple[int, int]]:
    """Yield each position pair (i, j), i < j, whose times differ by at most the window.

    ``timestamps`` must be sorted ascending. Each i only scans forward until the
    window closes, so the cost is O(n * w) for window population w.
    """
    n = len(timestamps)
    for i in range(n):
        ti = timestamps[i]
        j = i + 1
        while j < n and timestamps[j] - ti <= window_seconds:
            yield i, j
            j += 1


def classify_pair(score: float, theta: float) -> bool:
    return score >= theta


class PairScorer:
    """Scalar, per-pair scoring over a built corpus; the reference path for bulk scoring."""

    def __init__(self, corpus: Corpus, stats: CorpusStats, params: SimilarityParams | None = None,
                 index: FieldedIndex | None = None):
        self.corpus = corpus
        self.stats = stats
        self.params = params or SimilarityParams()
        self.index = index or build_index(corpus, stats, self.params.bm25f)
        self._profiles: dict[int, KeywordProfile] = {}
        self._queries: dict[int, ExpandedQuery] = {}
        self._self_scores: dict[int, float] = {}

    def profile(self, doc: int) -> KeywordProfile:
        if doc not in self._profiles:
            self._profiles[doc] = keyword_profile(
                doc, self.stats, self.corpus[doc].id, self.params.top_k, self.params.min_score
            )
        return self._profiles[doc]

    def query(self, doc: int) -> ExpandedQuery:
        if doc not in self._queries:
            self._queries[doc] = bo1_expand(doc, self.index, self.params.expansion_terms)
        return self._queries[doc]

    def normalized_bm25f(self, a: int, b: int) -> float:
        if a not in self._self_scores:
            self._self_scores[a] = bm25f_score(self.query(a), a, self.index)
        self_score = self._self_scores[a]
        if self_score <= 0.0:
            return 0.0
        return min(1.0, max(0.0, bm25f_score(self.query(a), b, self.index) / self_score))

    def pair_score(self, a: int, b: int) -> PairScore:
        kw = keyword_similarity(self.profile(a), self.profile(b))
        return PairScore(kw, self.normalized_bm25f(a, b), self.normalized_bm25f(b, a))


@dataclass(frozen=True)
class PairTable:
    """Scores for every windowed pair (i < j) with a non-zero symmetric score."""

    i: np.ndarray
    j: np.ndarray
    keyword: np.ndarray
    bm25f_ij: np.ndarray
    bm25f_ji: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    @property
    def symmetric(self) -> np.ndarray:
        return self.keyword / 2 + (self.bm25f_ij + self.bm25f_ji) / 4


def profile_matrix(profiles: Sequence[KeywordProfile]) -> tuple[sp.csr_matrix, np.ndarray]:
    vocab: dict[str, int] = {}
    rows, cols = [], []
    for r, p in enumerate(profiles):
        for t, _ in p.keywords:
            rows.append(r)
            cols.append(vocab.setdefault(t, len(vocab)))
    m = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(profiles), max(1, len(vocab))))
    sizes = np.array([len(p) for p in profiles], dtype=np.float64)
    return m, sizes


def _score_block(r0: int, r1: int, times: np.ndarray, window: int, mats: ScoringMatrices,
                 prof: sp.csr_matrix, prof_sizes: np.ndarray):
    lo = int(np.searchsorted(times, times[r0] - window, side="left"))
    hi = int(np.searchsorted(times, times[r1 - 1] + window, side="right"))

    raw = (mats.queries[r0:r1] @ mats.saturation[lo:hi].T).tocoo()
    a = raw.row.astype(np.int64) + r0
    b = raw.col.astype(np.int64) + lo
    keep = (a != b) & (np.abs(times[a] - times[b]) <= window) & (raw.data > 0)
    a, b, s = a[keep], b[keep], raw.data[keep]
    selfs = mats.self_scores[a]
    ok = selfs > 0
    directed = (a[ok], b[ok], np.minimum(1.0, s[ok] / selfs[ok]))

    shared = (prof[r0:r1] @ prof[lo:hi].T).tocoo()
    ka = shared.row.astype(np.int64) + r0
    kb = shared.col.astype(np.int64) + lo
    keep = (ka < kb) & (times[kb] - times[ka] <= window) & (shared.data > 0)
    ka, kb = ka[keep], kb[keep]
    kw = shared.data[keep] / np.minimum(prof_sizes[ka], prof_sizes[kb])
    return directed, (ka, kb, kw)


def score_pairs(corpus: Corpus, stats: CorpusStats, params: SimilarityParams,
                index: FieldedIndex | None = None, block: int = 256) -> PairTable:
    """Bulk equivalent of running ``PairScorer.pair_score`` over ``window_pairs``.

    Pairs whose every component is zero are not materialised.
    """
    index = index or build_index(corpus, stats, params.bm25f)
    mats = scoring_matrices(index, params.expansion_terms)
    profiles = [keyword_profile(d, stats, corpus[d].id, params.top_k, params.min_score)
                for d in range(len(corpus))]
    prof, prof_sizes = profile_matrix(profiles)
    times = np.array([a.timestamp for a in corpus], dtype=np.int64)
    n = len(corpus)
    window = params.window_seconds

    spans = [(r0, min(n, r0 + block)) for r0 in range(0, n, block)]
    with ThreadPoolExecutor(max_workers=max(1, params.workers)) as pool:
        results = list(pool.map(
            lambda span: _score_block(span[0], span[1], times, window, mats, prof, prof_sizes), spans))

    def cat(parts, k, dtype):
        arrs = [p[k] for p in parts]
        return np.concatenate(arrs).astype(dtype) if arrs else np.zeros(0, dtype)

    directed = [r[0] for r in results]
    kwparts = [r[1] for r in results]
    da, db, dv = cat(directed, 0, np.int64), cat(directed, 1, np.int64), cat(directed, 2, np.float64)
    ka, kb, kv = cat(kwparts, 0, np.int64), cat(kwparts, 1, np.int64), cat(kwparts, 2, np.float64)

    fwd = da < db
    key_ij = da[fwd] * n + db[fwd]
    key_ji = db[~fwd] * n + da[~fwd]
    key_kw = ka * n + kb
    keys = np.union1d(np.union1d(key_ij, key_ji), key_kw)

    def aligned(k, v):
        out = np.zeros(len(keys))
        out[np.searchsorted(keys, k)] = v
        return out

    return PairTable(
        i=keys // n,
        j=keys % n,
        keyword=aligned(key_kw, kv),
        bm25f_ij=aligned(key_ij, dv[fwd]),
        bm25f_ji=aligned(key_ji, dv[~fwd]),
    )


def network_from_pairs(corpus: Corpus, table: PairTable, theta: float) -> SimilarityNetwork:
    """Keep pairs whose symmetric score reaches ``theta``; insert both directed edges.

    A direction whose own ensemble weight is zero is left out so every weight is positive.
    """
    ids = corpus.ids
    sym = table.symmetric
    edges: list[SimilarityEdge] = []
    for k in np.flatnonzero(sym >= theta):
        i, j, kw = int(table.i[k]), int(table.j[k]), float(table.keyword[k])
        for a, b, s in ((i, j, table.bm25f_ij[k]), (j, i, table.bm25f_ji[k])):
            w = (kw + float(s)) / 2
            if w > 0:
                edges.append(SimilarityEdge(ids[a], ids[b], kw, float(s), w))
    order = {aid: p for p, aid in enumerate(ids)}
    edges.sort(key=lambda e: (order[e.source], order[e.target]))
    return SimilarityNetwork(tuple(ids), tuple(edges))


def build_network(corpus: Corpus, stats: CorpusStats, params: SimilarityParams | None = None,
                  index: FieldedIndex | None = None) -> SimilarityNetwork:
    params = params or SimilarityParams()
    table = score_pairs(corpus, stats, params, index)
    return network_from_pairs(corpus, table, params.thresholds.ensemble)


def calibrate_threshold(scores: Sequence[float], labels: Sequence[bool],
                        grid: Sequence[float] = CALIBRATION_GRID) -> tuple[float, float]:
    """Grid-search the threshold maximising F1; ties go to the smallest threshold."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    best = (grid[0], -1.0)
    for theta in grid:
        pred = s >= theta
        tp = int(np.sum(pred & y))
        fp = int(np.sum(pred & ~y))
        fn = int(np.sum(~pred & y))
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        if f1 > best[1]:
            best = (theta, f1)
    return best
