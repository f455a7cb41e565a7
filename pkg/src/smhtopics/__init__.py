"""Topic discovery by sampled min-hashing of inverted file bags."""

from .coherence import WindowCounts, count_windows, npmi_topic
from .corpus import BagOfWords, InvertedFileBag, Vocabulary, bags_to_matrix, build_inverted_file, ingest
from .discovery import (ClusterParams, SampledMinHashing, SearchParams, cluster_cws, extract_cws,
                        form_topics, rank_topics)
from .minhash import SmhParams, collision_probability, jaccard_bag, jcc_bags, num_tables

__version__ = "0.1.0"

__all__ = [
    "BagOfWords", "ClusterParams", "InvertedFileBag", "SampledMinHashing", "SearchParams",
    "SmhParams", "Vocabulary", "WindowCounts", "bags_to_matrix", "build_inverted_file", "cluster_cws",
    "collision_probability", "count_windows", "extract_cws", "form_topics", "ingest",
    "jaccard_bag", "jcc_bags", "npmi_topic", "num_tables", "rank_topics",
]
