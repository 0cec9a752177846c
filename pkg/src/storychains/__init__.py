"""Detect news story chains: windowed keyword + BM25F pair similarity, map-equation clustering."""

from .community import ClusterTree, hierarchical_cluster, map_equation, optimize_partition, visit_rates
from .corpus import Article, Corpus, CorpusError, CorpusStats, build_stats, load_corpus, tokenize
from .keywords import KeywordProfile, keyword_profile, keyword_similarity, kwscore
from .retrieval import BM25FParams, ExpandedQuery, FieldedIndex, bm25f_score, bo1_expand, build_index, normalized_bm25f
from .simnet import PairScorer, SimilarityNetwork, SimilarityParams, Thresholds, build_network, classify_pair, window_pairs

__version__ = "0.1.0"
