"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary."""

import csv
import math
import random
import time

import numpy as np
import pytest

from storychains import cli
from storychains.analysis import Confusion, local_peaks, pairwise_f1
from storychains.community import optimize_partition, read_tree, visit_rates
from storychains.corpus import build_stats
from storychains.keywords import kwscore
from storychains.retrieval import ExpandedQuery, bm25f_score, build_index
from storychains.simnet import SimilarityParams, score_pairs, window_pairs
from storychains.synthetic import generate

from .conftest import make_article, make_corpus
from .oracles import best_partition, dense_rates, network, small_graphs, two_level_codelength
from .test_retrieval import longhand_bm25f

DAY = 86_400


def metrics(tp, tn, fp, fn):
    m = Confusion(tp=tp, tn=tn, fp=fp, fn=fn).metrics()
    return m["accuracy"], m["precision"], m["recall"], m["f1"]


def test_validation_metrics_ensemble():
    assert metrics(49, 20642, 4, 10) == (0.999, 0.924, 0.831, 0.875)


def test_validation_metrics_keyword():
    assert metrics(49, 20641, 5, 10)[1:] == (0.907, 0.831, 0.867)


def test_validation_metrics_bm25f():
    assert metrics(49, 20636, 10, 10)[1:] == (0.831, 0.831, 0.831)


def test_kwscore_coherence():
    doc = "zed " + "aa " * 9
    s = build_stats(make_corpus(make_article("a", doc), make_article("b", "bb " * 9_990, hours=1)))
    assert s.total_tokens == 10_000
    score = kwscore("zed", 0, s)
    assert score == 1000.0 and score > 100
    # a raw count of one could never clear the 100 threshold
    assert s.doc_counts(0)["zed"] == 1


def test_bm25f_oracle():
    start = time.perf_counter()
    docs = [
        ("Flood warning", "river levels rise after heavy rain in the valley"),
        ("Rain", "heavy rain expected again tomorrow"),
        ("Election", "candidates debate the economy"),
    ]
    corpus = make_corpus(*(make_article(f"d{i}", b, title=t, hours=i) for i, (t, b) in enumerate(docs)))
    idx = build_index(corpus, build_stats(corpus))
    q = ExpandedQuery("q", (("rain", 1.0), ("flood", 2.0), ("river", 0.5), ("economy", 1.5)))
    for d in range(3):
        assert bm25f_score(q, d, idx) == pytest.approx(longhand_bm25f(q.terms, docs, d), abs=1e-9)

    rng = random.Random(2024)
    vocab = [f"v{i}" for i in range(12)]
    for _ in range(1000):
        n = rng.randint(3, 6)
        bodies = [rng.choices(vocab, k=rng.randint(2, 15)) for _ in range(n)]
        d = rng.randrange(n)
        terms = rng.sample(vocab, 4)
        q = ExpandedQuery("q", tuple((t, rng.uniform(0.1, 3.0)) for t in terms))
        c = make_corpus(*(make_article(f"d{i}", " ".join(b), hours=i) for i, b in enumerate(bodies)))
        ix = build_index(c, build_stats(c))
        base = bm25f_score(q, d, ix)
        assert base < sum(ix.idf(t) * w for t, w in q.terms) + 1e-12  # saturation
        held = [t for t in terms if t in bodies[d]]
        swap = [k for k, t in enumerate(bodies[d]) if t not in terms]
        if held and swap:
            bumped = [list(b) for b in bodies]
            bumped[d][swap[0]] = held[0]
            c2 = make_corpus(*(make_article(f"d{i}", " ".join(b), hours=i) for i, b in enumerate(bumped)))
            assert bm25f_score(q, d, build_index(c2, build_stats(c2))) >= base - 1e-12  # monotone
    assert time.perf_counter() - start < 10  # generous bound for slow CI machines


def test_windowing_oracle():
    rng = random.Random(99)
    for _ in range(50):
        n = rng.randint(0, 200)
        span = rng.choice([DAY, 2 * DAY, 10 * DAY, 60 * DAY])
        ts = sorted(rng.randint(0, span) for _ in range(n))
        got = list(window_pairs(ts, 3 * DAY))
        brute = [(i, j) for i in range(n) for j in range(i + 1, n) if abs(ts[j] - ts[i]) <= 3 * DAY]
        assert got == brute
        if n > 1 and ts[-1] - ts[0] > 3 * DAY:
            assert len(got) < n * (n - 1) // 2


def test_map_equation_oracle():
    start = time.perf_counter()
    suite = small_graphs(seed=0)
    matched = 0
    for name, nodes, edges in suite:
        assert len(nodes) <= 8
        optimum, _ = best_partition(nodes, edges)
        found = two_level_codelength(nodes, edges, optimize_partition(network(nodes, edges)))
        assert found <= two_level_codelength(nodes, edges, {v: 0 for v in nodes}) + 1e-12, name
        matched += abs(found - optimum) <= 1e-9
    print(f"map equation: optimum matched on {matched}/{len(suite)} graphs")
    assert matched >= math.ceil(0.95 * len(suite))
    assert time.perf_counter() - start < 30


def test_visit_rate_oracle():
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randint(2, 20)
        nodes = [f"n{i}" for i in range(n)]
        edges = [(u, v, rng.uniform(0.01, 1.0)) for u in nodes for v in nodes
                 if u != v and rng.random() < rng.choice([0.05, 0.2, 0.5])]
        rates = visit_rates(network(nodes, edges))
        p, _ = dense_rates(nodes, edges)
        assert np.max(np.abs(rates.rates - np.array([p[v] for v in nodes]))) <= 1e-9
        assert abs(rates.rates.sum() - 1) <= 1e-9


def _histogram(path):
    with open(path) as fh:
        return {float(r["hours"]): float(r["percent"]) for r in csv.DictReader(fh)}


def test_synthetic_story_recovery(tmp_path):
    start = time.perf_counter()
    syn = generate(n_stories=20, n_noise=200, story_sizes=(3, 15), seed=0)
    sizes = [len(v) for v in syn.stories().values()]
    assert len(sizes) == 20 and min(sizes) >= 3 and max(sizes) <= 15
    syn.write_jsonl(tmp_path / "corpus.jsonl")
    assert cli.main(["run", "--corpus", str(tmp_path / "corpus.jsonl"), "--output-dir", str(tmp_path / "out")]) == 0

    tree = read_tree(tmp_path / "out" / "tree.txt")
    f1 = pairwise_f1(tree.clusters("top"), syn.truth).f1
    pct = _histogram(tmp_path / "out" / "followup_histogram.csv")
    peaks = local_peaks(pct)
    daily = {round(h / 24) for h in peaks if h >= 22 and abs(h - 24 * round(h / 24)) <= 2}
    print(f"synthetic recovery: pairwise F1 {f1:.3f}, peaks at {peaks}")
    assert f1 >= 0.8
    assert sum(v for h, v in pct.items() if h < 72) == pytest.approx(100.0, abs=0.01)
    assert len(daily) >= 2
    assert time.perf_counter() - start < 120


def test_determinism(tmp_path):
    start = time.perf_counter()
    syn = generate(n_stories=20, n_noise=200, seed=1)
    corpus = tmp_path / "corpus.jsonl"
    syn.write_jsonl(corpus)
    labels = tmp_path / "labels.csv"
    with labels.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id_a", "id_b", "related"])
        for a, b, rel in syn.labeled_pairs(3 * DAY):
            w.writerow([a, b, int(rel)])
    outs = [tmp_path / "run1", tmp_path / "run2"]
    for out in outs:
        assert cli.main(["run", "--corpus", str(corpus), "--labels", str(labels), "--output-dir", str(out)]) == 0
    names = sorted(p.name for p in outs[0].iterdir() if p.name not in ("config.effective", "index.cache"))
    assert {"edges.tsv", "tree.txt", "eval_report.txt", "cluster_sizes.txt", "association.txt"} <= set(names)
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    assert time.perf_counter() - start < 120


@pytest.mark.slow
def test_performance_envelope(tmp_path):
    syn = generate(n_stories=900, n_noise=4000, story_sizes=(3, 15), days=365, seed=7)
    n = len(syn.corpus)
    assert n >= 10_000
    syn.write_jsonl(tmp_path / "corpus.jsonl")
    start = time.perf_counter()
    assert cli.main(["cluster", "--corpus", str(tmp_path / "corpus.jsonl"), "--output-dir", str(tmp_path / "out"),
                     "--threshold-ensemble", "0.35"]) == 0
    elapsed = time.perf_counter() - start
    times = [a.timestamp for a in syn.corpus]
    windowed = sum(1 for _ in window_pairs(times, 3 * DAY))
    print(f"performance: {n} articles clustered in {elapsed:.1f} s; "
          f"{windowed} windowed pairs vs {n * (n - 1) // 2} for all pairs")
    assert windowed < 0.05 * n * (n - 1) / 2
    assert elapsed < 600
