"""Article loading, tokenization and corpus frequency statistics."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

FIELDS = ("title", "body")
REQUIRED_KEYS = ("id", "source", "title", "body", "published")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusError(Exception):
    """Fatal problem with the input corpus (unreadable file, duplicate ids, ...)."""


@dataclass(frozen=True)
class Article:
    id: str
    source: str
    title: str
    body: str
    published: datetime
    url: str | None = None

    @property
    def timestamp(self) -> int:
        """Publication time as integer UTC epoch seconds."""
        return int(self.published.timestamp())


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str


@dataclass(frozen=True)
class Corpus:
    """Immutable, time-ordered collection of articles."""

    articles: tuple[Article, ...]
    rejects: tuple[Reject, ...] = ()
    _index: Mapping[str, int] = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for i, art in enumerate(self.articles):
            if art.id in index:
                raise CorpusError(f"duplicate article id {art.id!r}")
            index[art.id] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_articles(cls, articles: Iterable[Article], rejects: Sequence[Reject] = ()) -> "Corpus":
        ordered = sorted(articles, key=lambda a: (a.timestamp, a.id))
        return cls(tuple(ordered), tuple(rejects))

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __getitem__(self, i: int) -> Article:
        return self.articles[i]

    def __contains__(self, article_id: object) -> bool:
        return article_id in self._index

    def position(self, article_id: str) -> int:
        try:
            return self._index[article_id]
        except KeyError:
            raise KeyError(f"unknown article id {article_id!r}") from None

    def get(self, article_id: str) -> Article:
        return self.articles[self.position(article_id)]

    @property
    def ids(self) -> list[str]:
        return [a.id for a in self.articles]


def tokenize(text: str) -> list[str]:
    """Case-fold and split on runs of non-alphanumeric characters.

    No stopword removal and no stemming; digits are kept.

    >>> tokenize("£3.5m jackpot!")
    ['3', '5m', 'jackpot']
    """
    if not text:
        return []
    return _TOKEN_RE.findall(text.casefold())


def parse_timestamp(value: str) -> datetime:
    """Parse ISO-8601 into an aware UTC datetime at second resolution.

    Naive timestamps are taken to be UTC already.
    """
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc).replace(microsecond=0)
    if not math.isfinite(dt.timestamp()):
        raise ValueError(f"non-finite timestamp {value!r}")
    return dt


def _records_jsonl(path: Path) -> Iterator[tuple[int, dict | None, str]]:
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(rec, dict):
                yield lineno, None, "record is not an object"
                continue
            yield lineno, rec, ""


def _records_csv(path: Path) -> Iterator[tuple[int, dict | None, str]]:
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            # header is line 1
            yield reader.line_num, {k: v for k, v in rec.items() if k is not None}, ""


def _to_article(rec: dict) -> Article:
    missing = [k for k in REQUIRED_KEYS if rec.get(k) is None]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    art_id = str(rec["id"]).strip()
    if not art_id:
        raise ValueError("empty id")
    url = rec.get("url")
    return Article(
        id=art_id,
        source=str(rec["source"]),
        title=str(rec["title"]),
        body=str(rec["body"]),
        published=parse_timestamp(rec["published"]),
        url=str(url) if url not in (None, "") else None,
    )


def load_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a JSON-lines or CSV corpus sorted by publication time.

    Malformed records are skipped and listed in ``Corpus.rejects``; an
    unreadable file or a duplicated id raises :class:`CorpusError`.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unsupported corpus format {fmt!r} for {path}")
    if not path.is_file():
        raise CorpusError(f"cannot read corpus file {path}")

    reader = _records_jsonl if fmt == "jsonl" else _records_csv
    articles: list[Article] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    try:
        for lineno, rec, err in reader(path):
            if rec is None:
                rejects.append(Reject(lineno, err))
                continue
            try:
                art = _to_article(rec)
            except (ValueError, TypeError, OverflowError) as exc:
                rejects.append(Reject(lineno, str(exc)))
                continue
            if art.id in seen:
                raise CorpusError(f"duplicate article id {art.id!r} (line {lineno})")
            seen.add(art.id)
            articles.append(art)
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc

    for rej in rejects:
        log.warning("%s:%d: rejected record: %s", path, rej.line, rej.reason)
    return Corpus.from_articles(articles, rejects)


@dataclass(frozen=True)
class CorpusStats:
    """Token counts per document and field plus corpus-wide totals.

    Documents are addressed by their position in the (time-sorted) corpus.
    """

    n_docs: int
    field_counts: dict[str, tuple[Counter, ...]]
    field_lengths: dict[str, tuple[int, ...]]
    avg_field_length: dict[str, float]
    term_totals: Counter
    total_tokens: int
    doc_freq: Counter

    def occurs(self, term: str, doc: int, field: str) -> int:
        return self.field_counts[field][doc].get(term, 0)

    def doc_counts(self, doc: int) -> Counter:
        """Counts of every term in a document, fields pooled."""
        pooled: Counter = Counter()
        for f in self.field_counts:
            pooled.update(self.field_counts[f][doc])
        return pooled

    def doc_length(self, doc: int) -> int:
        return sum(self.field_lengths[f][doc] for f in self.field_lengths)

    @property
    def vocabulary(self) -> list[str]:
        return sorted(self.term_totals)


def build_stats(corpus: Corpus) -> CorpusStats:
    if len(corpus) == 0:
        raise CorpusError("cannot build statistics for an empty corpus")
    counts: dict[str, list[Counter]] = {f: [] for f in FIELDS}
    lengths: dict[str, list[int]] = {f: [] for f in FIELDS}
    totals: Counter = Counter()
    df: Counter = Counter()
    for art in corpus:
        seen: set[str] = set()
        for f in FIELDS:
            toks = tokenize(getattr(art, f))
            c = Counter(toks)
            counts[f].append(c)
            lengths[f].append(len(toks))
            totals.update(c)
            seen.update(c)
        df.update(seen)
    n = len(corpus)
    return CorpusStats(
        n_docs=n,
        field_counts={f: tuple(v) for f, v in counts.items()},
        field_lengths={f: tuple(v) for f, v in lengths.items()},
        avg_field_length={f: sum(v) / n for f, v in lengths.items()},
        term_totals=totals,
        total_tokens=sum(totals.values()),
        doc_freq=df,
    )


def corpus_fingerprint(corpus: Corpus) -> str:
    """Content hash over every article field, stable across runs."""
    h = hashlib.sha256()
    for a in corpus:
        for part in (a.id, a.source, a.title, a.body, str(a.timestamp), a.url or ""):
            h.update(part.encode("utf-8"))
            h.update(b"\x1f")
        h.update(b"\x1e")
    return h.hexdigest()
