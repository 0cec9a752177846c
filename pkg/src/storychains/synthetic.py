"""Synthetic corpora with planted stories, for tests and benchmarks."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import Article, Corpus

SOURCES = ("bbc", "mail", "express", "guardian", "mirror", "sun")
_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"


def _word(rng: np.random.Generator, syllables: int) -> str:
    return "".join(rng.choice(list(_CONSONANTS)) + rng.choice(list(_VOWELS)) for _ in range(syllables))


@dataclass(frozen=True)
class SyntheticCorpus:
    corpus: Corpus
    truth: dict[str, str]  # article id -> planted story label; noise articles absent

    def stories(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for a, s in self.truth.items():
            out.setdefault(s, []).append(a)
        return out

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a in self.corpus:
                fh.write(json.dumps({
                    "id": a.id, "source": a.source, "title": a.title, "body": a.body,
                    "published": a.published.isoformat().replace("+00:00", "Z"),
                }) + "\n")

    def labeled_pairs(self, window_seconds: int) -> list[tuple[str, str, bool]]:
        """Every in-window pair with its planted relatedness."""
        arts = list(self.corpus)
        out = []
        for i, a in enumerate(arts):
            for b in arts[i + 1:]:
                if b.timestamp - a.timestamp > window_seconds:
                    break
                sa, sb = self.truth.get(a.id), self.truth.get(b.id)
                out.append((a.id, b.id, sa is not None and sa == sb))
        return out


def generate(
    n_stories: int = 20,
    n_noise: int = 200,
    story_sizes: tuple[int, int] = (3, 15),
    days: int = 30,
    seed: int = 0,
    vocab_size: int = 1500,
    names_per_story: int = 8,
    topic_words: int = 30,
    start: datetime = datetime(2013, 4, 1, tzinfo=timezone.utc),
) -> SyntheticCorpus:
    """Plant ``n_stories`` stories among ``n_noise`` unrelated articles.

    Every article draws its running text from a shared Zipf-distributed
    vocabulary plus a dozen words from a large pool of topical terms. Story
    articles take their topical terms from the story's own subset of the pool
    and add some of the story's rare proper nouns; noise articles take random
    topical terms and rare names of their own. Follow-up articles of a story
    appear on the same day or close to 24 h / 48 h after the first one.
    """
    rng = np.random.default_rng(seed)
    common = sorted({_word(rng, 2) for _ in range(vocab_size * 2)})[:vocab_size]
    rng.shuffle(common)
    zipf = 1.0 / np.arange(1, len(common) + 1) ** 1.05
    zipf /= zipf.sum()
    used = set(common)

    def rare_words(k: int) -> list[str]:
        out = []
        while len(out) < k:
            w = _word(rng, int(rng.integers(3, 5)))
            if w not in used:
                used.add(w)
                out.append(w)
        return out

    pool = rare_words(4000)

    def topical(words: list[str], k: int) -> list[str]:
        picks = rng.choice(words, size=k, replace=False)
        return [str(w) for w in picks for _ in range(int(rng.integers(1, 3)))]

    def filler(k: int) -> list[str]:
        return [common[i] for i in rng.choice(len(common), size=k, p=zipf)]

    def compose(specials: list[str], length: int) -> tuple[str, str]:
        words = filler(length) + specials
        rng.shuffle(words)
        title_words = filler(int(rng.integers(4, 8))) + specials[:2]
        rng.shuffle(title_words)
        return " ".join(title_words).capitalize(), " ".join(words) + "."

    def day_time(day: float) -> float:
        return day * 86_400 + rng.uniform(7, 22) * 3_600

    articles: list[Article] = []
    truth: dict[str, str] = {}
    n = 0

    for s in range(n_stories):
        size = int(rng.integers(story_sizes[0], story_sizes[1] + 1))
        names = [w.capitalize() for w in rare_words(names_per_story)]
        topic = [str(w) for w in rng.choice(pool, size=topic_words, replace=False)]
        t0 = day_time(int(rng.integers(0, days - 3)))
        label = f"story{s:02d}"
        for k in range(size):
            if k == 0:
                offset = 0.0
            else:
                cycle = int(rng.choice(3, p=(0.35, 0.4, 0.25)))
                if cycle == 0:
                    offset = rng.uniform(0.5, 8.0) * 3_600
                else:
                    offset = (24.0 * cycle + rng.normal(0.0, 0.6)) * 3_600
            picks = list(rng.choice(names, size=int(rng.integers(4, 7)), replace=False))
            specials = [w for w in picks for _ in range(int(rng.integers(1, 4)))]
            specials += topical(topic, 12)
            title, body = compose(specials, int(rng.integers(120, 260)))
            aid = f"a{n:05d}"
            n += 1
            articles.append(_article(aid, rng, title, body, start, t0 + offset))
            truth[aid] = label

    for _ in range(n_noise):
        specials = [w.capitalize() for w in rare_words(int(rng.integers(2, 5)))]
        specials = [w for w in specials for _ in range(int(rng.integers(1, 3)))]
        specials += topical(pool, 12)
        title, body = compose(specials, int(rng.integers(200, 600)))
        aid = f"a{n:05d}"
        n += 1
        articles.append(_article(aid, rng, title, body, start, day_time(int(rng.integers(0, days)))))

    return SyntheticCorpus(Corpus.from_articles(articles), truth)


def _article(aid: str, rng: np.random.Generator, title: str, body: str,
             start: datetime, seconds: float) -> Article:
    published = start + timedelta(seconds=int(seconds))
    return Article(aid, str(rng.choice(SOURCES)), title, body, published)
