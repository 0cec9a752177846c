"""Stage orchestration shared by the command-line subcommands.

Every stage writes fixed file names under the configured output directory so
later stages (or re-runs) can pick them up.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

from . import analysis
from .community import ClusterTree, hierarchical_cluster, read_tree
from .config import PipelineConfig, dump_config
from .corpus import Corpus, CorpusError, CorpusStats, build_stats, corpus_fingerprint, load_corpus
from .keywords import keyword_profile, write_profiles
from .retrieval import FieldedIndex, build_index, load_index, save_index
from .simnet import (
    CLASSIFIERS,
    DEFAULT_THRESHOLD,
    PairScorer,
    SimilarityNetwork,
    Thresholds,
    calibrate_threshold,
    network_from_pairs,
    score_pairs,
)

log = logging.getLogger(__name__)

INDEX_CACHE = "index.cache"
EDGES = "edges.tsv"
TREE = "tree.txt"
SUMMARY = "summary.txt"
THRESHOLDS = "thresholds.tsv"
PROFILES = "profiles.tsv"
PREDICTIONS = "pair_predictions.tsv"
EVAL_TXT = "eval_report.txt"
EVAL_CSV = "eval_report.csv"
SIZES_TXT = "cluster_sizes.txt"
SIZES_CSV = "cluster_sizes.csv"
ASSOC_TXT = "association.txt"
ASSOC_CSV = "association.csv"
HISTOGRAM = "followup_histogram.csv"


@dataclass
class Loaded:
    corpus: Corpus
    stats: CorpusStats
    index: FieldedIndex
    from_cache: bool


def _cache_key(corpus: Corpus, config: PipelineConfig) -> str:
    h = hashlib.sha256(corpus_fingerprint(corpus).encode())
    h.update(repr(config.bm25f()).encode())
    return h.hexdigest()


def load(config: PipelineConfig) -> Loaded:
    if not config.corpus:
        raise CorpusError("no corpus path configured")
    fmt = None if config.format == "auto" else config.format
    corpus = load_corpus(config.corpus, fmt)
    if len(corpus) == 0:
        raise CorpusError(f"corpus {config.corpus} contains no valid articles")
    key = _cache_key(corpus, config)
    cached = load_index(config.out / INDEX_CACHE, key)
    if cached is not None:
        return Loaded(corpus, cached.stats, cached, True)
    stats = build_stats(corpus)
    return Loaded(corpus, stats, build_index(corpus, stats, config.bm25f()), False)


def ingest(config: PipelineConfig) -> Loaded:
    loaded = load(config)
    config.out.mkdir(parents=True, exist_ok=True)
    if not loaded.from_cache:
        save_index(loaded.index, config.out / INDEX_CACHE, _cache_key(loaded.corpus, config))
    return loaded


@dataclass(frozen=True)
class ResolvedThresholds:
    thresholds: Thresholds
    origin: dict[str, str]
    f1: dict[str, float | None]

    def to_tsv(self) -> str:
        lines = ["classifier\ttheta\torigin\tcalibration_f1"]
        for c in CLASSIFIERS:
            f1 = self.f1[c]
            lines.append(f"{c}\t{getattr(self.thresholds, c):.2f}\t{self.origin[c]}\t"
                         + ("" if f1 is None else f"{f1:.3f}"))
        return "\n".join(lines) + "\n"


def labeled_scores(loaded: Loaded, config: PipelineConfig,
                   labels: list[analysis.LabeledPair]) -> tuple[list[analysis.LabeledPair], list, int]:
    """Score every in-window labelled pair; returns (kept pairs, scores, excluded count)."""
    corpus = loaded.corpus
    scorer = PairScorer(corpus, loaded.stats, config.similarity(), loaded.index)
    window = config.similarity().window_seconds
    kept, scores, excluded = [], [], 0
    for lp in labels:
        for x in (lp.id_a, lp.id_b):
            if x not in corpus:
                raise analysis.LabelError(f"labelled pair refers to unknown article {x!r}")
        a, b = corpus.position(lp.id_a), corpus.position(lp.id_b)
        if abs(corpus[a].timestamp - corpus[b].timestamp) > window:
            excluded += 1
            continue
        kept.append(lp)
        scores.append(scorer.pair_score(a, b))
    return kept, scores, excluded


def resolve_thresholds(loaded: Loaded, config: PipelineConfig) -> ResolvedThresholds:
    fixed = config.fixed_thresholds()
    values: dict[str, float] = {}
    origin: dict[str, str] = {}
    f1: dict[str, float | None] = {c: None for c in CLASSIFIERS}
    pending = [c for c in CLASSIFIERS if fixed[c] is None]
    if pending and config.labels:
        kept, scores, _ = labeled_scores(loaded, config, analysis.read_labels(config.labels))
        truth = [lp.related for lp in kept]
        for c in pending:
            theta, best = calibrate_threshold([s.classifier_score(c) for s in scores], truth)
            values[c], origin[c], f1[c] = theta, "calibrated", best
    for c in CLASSIFIERS:
        if c in values:
            continue
        if fixed[c] is not None:
            values[c], origin[c] = fixed[c], "configured"
        else:
            values[c], origin[c] = DEFAULT_THRESHOLD, "default"
    return ResolvedThresholds(Thresholds(**values), origin, f1)


@dataclass
class ClusterResult:
    network: SimilarityNetwork
    tree: ClusterTree
    thresholds: ResolvedThresholds
    n_pairs: int


def cluster(config: PipelineConfig, loaded: Loaded | None = None) -> ClusterResult:
    loaded = loaded or ingest(config)
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    resolved = resolve_thresholds(loaded, config)
    params = config.similarity(resolved.thresholds)
    table = score_pairs(loaded.corpus, loaded.stats, params, loaded.index)
    network = network_from_pairs(loaded.corpus, table, resolved.thresholds.ensemble)
    if not network.edges:
        log.warning("no pair reached the ensemble threshold %.2f; every article is a singleton",
                    resolved.thresholds.ensemble)
    tree = hierarchical_cluster(network, seed=config.seed, teleport=config.teleport)

    network.write_edges(out / EDGES)
    tree.write(out / TREE)
    (out / THRESHOLDS).write_text(resolved.to_tsv(), encoding="utf-8")
    s = tree.summary()
    (out / SUMMARY).write_text(
        f"articles\t{len(loaded.corpus)}\n"
        f"scored_pairs\t{len(table)}\n"
        f"edges\t{len(network.edges)}\n"
        f"modules\t{s['modules']}\n"
        f"non_singleton_modules\t{s['non_singleton_modules']}\n"
        f"leaf_modules\t{s['leaf_modules']}\n"
        f"codelength\t{s['codelength']:.9f}\n"
        f"depth\t{s['depth']}\n",
        encoding="utf-8",
    )
    (out / "config.effective").write_text(dump_config(config), encoding="utf-8")
    if config.dump_profiles:
        st = loaded.stats
        write_profiles(
            (keyword_profile(d, st, loaded.corpus[d].id, config.keyword_top_k, config.keyword_min_score)
             for d in range(len(loaded.corpus))),
            out / PROFILES,
        )
    return ClusterResult(network, tree, resolved, len(table))


def evaluate(config: PipelineConfig, loaded: Loaded | None = None) -> analysis.EvalReport:
    if not config.labels:
        raise analysis.LabelError("no labels file configured")
    labels = analysis.read_labels(config.labels)
    loaded = loaded or ingest(config)
    resolved = resolve_thresholds(loaded, config)
    th = resolved.thresholds
    kept, scores, excluded = labeled_scores(loaded, config, labels)
    preds = [
        analysis.PairPrediction(lp.id_a, lp.id_b, s.keyword >= th.keyword, s.bm25f >= th.bm25f,
                                s.symmetric >= th.ensemble)
        for lp, s in zip(kept, scores)
    ]
    report = analysis.evaluate(preds, kept)
    report = analysis.EvalReport(report.confusion, report.n_articles, report.n_pairs, excluded)

    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    with open(out / PREDICTIONS, "w", encoding="utf-8") as fh:
        fh.write("id_a\tid_b\tkeyword_related\tbm25f_related\tensemble_related\n")
        for p in preds:
            fh.write(f"{p.id_a}\t{p.id_b}\t{int(p.keyword)}\t{int(p.bm25f)}\t{int(p.ensemble)}\n")
    (out / EVAL_TXT).write_text(report.to_text(), encoding="utf-8")
    (out / EVAL_CSV).write_text(report.to_csv(), encoding="utf-8")
    (out / THRESHOLDS).write_text(resolved.to_tsv(), encoding="utf-8")
    return report


@dataclass
class StatsResult:
    sizes: analysis.SizeTable
    association: analysis.AssociationStats
    histogram: analysis.Histogram


def stats(config: PipelineConfig, corpus: Corpus | None = None) -> StatsResult:
    tree_path = config.out / TREE
    if not tree_path.is_file():
        raise CorpusError(f"cluster tree {tree_path} not found; run the cluster stage first")
    if corpus is None:
        fmt = None if config.format == "auto" else config.format
        corpus = load_corpus(config.corpus, fmt)
    tree = read_tree(tree_path)
    missing = [a for _, a in tree.paths() if a not in corpus]
    if missing:
        raise CorpusError(f"cluster tree names unknown article {missing[0]!r}")
    level = config.stats_level
    sizes = analysis.cluster_size_table(tree, corpus, level)
    assoc = analysis.association_stats(tree, corpus, level)
    hist = analysis.followup_histogram(tree, corpus, config.followup_min_cluster,
                                       config.histogram_bin_hours, level)
    out = config.out
    (out / SIZES_TXT).write_text(sizes.to_text(), encoding="utf-8")
    (out / SIZES_CSV).write_text(sizes.to_csv(), encoding="utf-8")
    (out / ASSOC_TXT).write_text(assoc.to_text(), encoding="utf-8")
    (out / ASSOC_CSV).write_text(assoc.to_csv(), encoding="utf-8")
    (out / HISTOGRAM).write_text(hist.to_csv(), encoding="utf-8")
    return StatsResult(sizes, assoc, hist)
