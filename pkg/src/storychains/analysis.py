"""Classifier evaluation against labelled pairs and descriptive story statistics."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .community import ClusterTree
from .corpus import Corpus

CLASSIFIERS = ("keyword", "bm25f", "ensemble")
SIZE_BINS = ((2, 10, "2-10"), (11, 20, "11-20"), (21, 30, "21-30"), (31, 40, "31-40"), (41, None, "40+"))
DAY = 86_400.0
HOUR = 3_600.0


class LabelError(ValueError):
    """Malformed or inconsistent labelled-pairs input."""


def round3(x: float) -> float:
    """Half-up rounding to three decimals, as reports print them."""
    return float(Decimal(repr(x)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def metrics(self, rounded: bool = True) -> dict[str, float]:
        vals = {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}
        return {k: round3(v) for k, v in vals.items()} if rounded else vals

    @classmethod
    def from_predictions(cls, predicted: Iterable[bool], actual: Iterable[bool]) -> "Confusion":
        c = Counter((bool(p), bool(a)) for p, a in zip(predicted, actual, strict=True))
        return cls(tp=c[True, True], tn=c[False, False], fp=c[True, False], fn=c[False, True])


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    related: bool


@dataclass(frozen=True)
class PairPrediction:
    id_a: str
    id_b: str
    keyword: bool
    bm25f: bool
    ensemble: bool

    def get(self, classifier: str) -> bool:
        return getattr(self, classifier)


@dataclass(frozen=True)
class EvalReport:
    confusion: dict[str, Confusion]
    n_articles: int
    n_pairs: int
    excluded: int = 0

    def rows(self) -> list[tuple[str, list]]:
        m = {c: self.confusion[c].metrics() for c in CLASSIFIERS}
        out: list[tuple[str, list]] = [
            ("Accuracy", [m[c]["accuracy"] for c in CLASSIFIERS]),
            ("Precision", [m[c]["precision"] for c in CLASSIFIERS]),
            ("Recall", [m[c]["recall"] for c in CLASSIFIERS]),
            ("F1", [m[c]["f1"] for c in CLASSIFIERS]),
            ("True Positive", [self.confusion[c].tp for c in CLASSIFIERS]),
            ("True Negative", [self.confusion[c].tn for c in CLASSIFIERS]),
            ("False Positive", [self.confusion[c].fp for c in CLASSIFIERS]),
            ("False Negative", [self.confusion[c].fn for c in CLASSIFIERS]),
            ("N articles", [self.n_articles] * 3),
            ("N article pairs", [self.n_pairs] * 3),
        ]
        return out

    def to_text(self) -> str:
        header = ["Classifier:", "Keyword", "BM25F", "Ensemble"]
        body = [[name] + [f"{v:.3f}" if isinstance(v, float) else str(v) for v in vals]
                for name, vals in self.rows()]
        text = _aligned([header] + body)
        if self.excluded:
            text += f"{self.excluded} labelled pair(s) outside the window excluded\n"
        return text

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", *CLASSIFIERS])
        for name, vals in self.rows():
            w.writerow([name, *[f"{v:.3f}" if isinstance(v, float) else v for v in vals]])
        return buf.getvalue()


def _aligned(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def read_labels(path: str | Path) -> list[LabeledPair]:
    """Parse a labelled-pairs CSV (id_a, id_b, related in {0, 1})."""
    out: list[LabeledPair] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["id_a", "id_b", "related"]:
            raise LabelError(f"{path}:1: expected header id_a,id_b,related")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise LabelError(f"{path}:{line}: expected 3 columns, got {len(row)}")
            a, b, rel = (c.strip() for c in row)
            if rel not in ("0", "1") or not a or not b:
                raise LabelError(f"{path}:{line}: malformed label row {row!r}")
            out.append(LabeledPair(a, b, rel == "1"))
    return out


def evaluate(predictions: Iterable[PairPrediction], labels: Sequence[LabeledPair],
             corpus: Corpus | None = None, window_seconds: int | None = None) -> EvalReport:
    """Confusion counts and metrics for the three classifiers.

    Labelled pairs referring to unknown articles are fatal; when a corpus and
    window are given, pairs published further apart than the window are
    excluded and counted. Labelled pairs with no prediction count as
    predicted unrelated.
    """
    pred = {frozenset((p.id_a, p.id_b)): p for p in predictions}
    kept: list[LabeledPair] = []
    excluded = 0
    for lp in labels:
        if corpus is not None:
            for x in (lp.id_a, lp.id_b):
                if x not in corpus:
                    raise LabelError(f"labelled pair refers to unknown article {x!r}")
            if window_seconds is not None:
                gap = abs(corpus.get(lp.id_a).timestamp - corpus.get(lp.id_b).timestamp)
                if gap > window_seconds:
                    excluded += 1
                    continue
        kept.append(lp)

    confusion = {}
    for c in CLASSIFIERS:
        guessed = []
        for lp in kept:
            p = pred.get(frozenset((lp.id_a, lp.id_b)))
            guessed.append(bool(p and p.get(c)))
        confusion[c] = Confusion.from_predictions(guessed, [lp.related for lp in kept])
    n_articles = len({x for lp in kept for x in (lp.id_a, lp.id_b)})
    return EvalReport(confusion, n_articles, len(kept), excluded)


def _durations_days(groups: Sequence[Sequence[str]], corpus: Corpus) -> list[float]:
    out = []
    for g in groups:
        ts = [corpus.get(a).timestamp for a in g]
        out.append((max(ts) - min(ts)) / DAY)
    return out


@dataclass(frozen=True)
class SizeBin:
    label: str
    clusters: int
    articles: int
    percent: float
    mean_duration: float


@dataclass(frozen=True)
class SizeTable:
    bins: tuple[SizeBin, ...]
    total: SizeBin
    n_articles: int

    def to_text(self) -> str:
        header = ["Cluster size", "N", "Articles", "% of total", "Avg duration (days)"]
        rows = [[b.label, str(b.clusters), str(b.articles), f"{b.percent:.1f}", f"{b.mean_duration:.1f}"]
                for b in (*self.bins, self.total)]
        return _aligned([header] + rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cluster_size", "clusters", "articles", "percent_of_total", "mean_duration_days"])
        for b in (*self.bins, self.total):
            w.writerow([b.label, b.clusters, b.articles, f"{b.percent:.3f}", f"{b.mean_duration:.3f}"])
        return buf.getvalue()


def cluster_size_table(tree: ClusterTree, corpus: Corpus, level: str = "top") -> SizeTable:
    """Clusters of two or more articles binned by size; percentages are of the whole corpus."""
    groups = [g for g in tree.clusters(level) if len(g) >= 2]
    durations = _durations_days(groups, corpus)
    n = len(corpus)

    def summarise(label: str, members: list[int]) -> SizeBin:
        arts = sum(len(groups[i]) for i in members)
        mean = sum(durations[i] for i in members) / len(members) if members else 0.0
        return SizeBin(label, len(members), arts, 100.0 * arts / n if n else 0.0, mean)

    bins = []
    for lo, hi, label in SIZE_BINS:
        idx = [i for i, g in enumerate(groups) if len(g) >= lo and (hi is None or len(g) <= hi)]
        bins.append(summarise(label, idx))
    return SizeTable(tuple(bins), summarise("Total", list(range(len(groups)))), n)


@dataclass(frozen=True)
class AssociationStats:
    n_articles: int
    same_source: int
    cross_source: int

    @property
    def same_source_percent(self) -> float:
        return 100.0 * self.same_source / self.n_articles if self.n_articles else 0.0

    @property
    def cross_source_percent(self) -> float:
        return 100.0 * self.cross_source / self.n_articles if self.n_articles else 0.0

    def to_text(self) -> str:
        rows = [
            ["Number of articles", str(self.n_articles), ""],
            ["Associated with an article in the same source", str(self.same_source),
             f"{self.same_source_percent:.0f}%"],
            ["Associated with an article in another source", str(self.cross_source),
             f"{self.cross_source_percent:.0f}%"],
        ]
        return _aligned(rows)

    def to_csv(self) -> str:
        return (
            "measure,count,percent\n"
            f"articles,{self.n_articles},100.000\n"
            f"same_source,{self.same_source},{self.same_source_percent:.3f}\n"
            f"cross_source,{self.cross_source},{self.cross_source_percent:.3f}\n"
        )


def association_stats(tree: ClusterTree, corpus: Corpus, level: str = "top") -> AssociationStats:
    """Articles sharing a cluster with another article of the same / a different source.

    The two categories are not exclusive.
    """
    same = cross = 0
    for g in tree.clusters(level):
        if len(g) < 2:
            continue
        sources = Counter(corpus.get(a).source for a in g)
        for a in g:
            s = corpus.get(a).source
            if sources[s] > 1:
                same += 1
            if sources[s] < len(g):
                cross += 1
    return AssociationStats(len(corpus), same, cross)


@dataclass(frozen=True)
class Histogram:
    bin_hours: float
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def percentages(self) -> dict[float, float]:
        """Bin start (hours) -> percent of all follow-ups, for every bin up to the last non-empty one."""
        if not self.counts:
            return {}
        total = self.total
        last = max(self.counts)
        return {k * self.bin_hours: 100.0 * self.counts.get(k, 0) / total for k in range(last + 1)}

    def to_csv(self) -> str:
        lines = ["hours,percent"]
        lines += [f"{h:g},{p:.4f}" for h, p in self.percentages().items()]
        return "\n".join(lines) + "\n"


def followup_histogram(tree: ClusterTree, corpus: Corpus, min_cluster: int = 10,
                       bin_hours: float = 1.0, level: str = "top") -> Histogram:
    """Delay of each later article after its cluster's first one, over clusters of ``min_cluster``+."""
    width = bin_hours * HOUR
    counts: Counter = Counter()
    for g in tree.clusters(level):
        if len(g) < max(2, min_cluster):
            continue
        ts = sorted(corpus.get(a).timestamp for a in g)
        for t in ts[1:]:
            counts[int((t - ts[0]) // width)] += 1
    return Histogram(bin_hours, dict(sorted(counts.items())))


def local_peaks(percent: Mapping[float, float], radius: int = 3) -> list[float]:
    """Bin starts whose value is positive and maximal within ``radius`` bins either side."""
    keys = list(percent)
    vals = [percent[k] for k in keys]
    peaks = []
    for i, v in enumerate(vals):
        lo, hi = max(0, i - radius), min(len(vals), i + radius + 1)
        if v > 0 and v == max(vals[lo:hi]) and (i == 0 or vals[i - 1] < v):
            peaks.append(keys[i])
    return peaks


def pairwise_f1(found: Iterable[Sequence[str]], truth: Mapping[str, str]) -> Confusion:
    """Co-membership confusion between a clustering and a reference grouping.

    ``truth`` maps article id to its reference group; ids missing from it are
    treated as singletons. Only pairs that share a cluster or a reference group
    are counted, so the negatives total is left at zero.
    """
    found_of: dict[str, int] = {}
    for i, g in enumerate(found):
        for a in g:
            found_of[a] = i
    by_truth: dict[str, list[str]] = {}
    for a, t in truth.items():
        by_truth.setdefault(t, []).append(a)

    def same_found(a: str, b: str) -> bool:
        return a in found_of and found_of.get(a) == found_of.get(b)

    tp = fn = 0
    for members in by_truth.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if same_found(members[i], members[j]):
                    tp += 1
                else:
                    fn += 1
    predicted = sum(len(g) * (len(g) - 1) // 2 for g in found)
    return Confusion(tp=tp, tn=0, fp=predicted - tp, fn=fn)
