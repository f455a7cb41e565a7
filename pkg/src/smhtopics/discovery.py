"""Topic discovery: co-occurring word sets, overlap clustering and topic ranking."""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .corpus import InvertedFileBag
from .minhash import SmhParams, UnitIndex, candidate_positions, group_by_fingerprint, num_tables


@dataclass(frozen=True)
class CoOccurringWordSet:
    cws_id: int
    words: tuple[int, ...]
    table_index: int

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class TopicCluster:
    cluster_id: int
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class Topic:
    topic_id: int
    ranked_words: list[tuple[int, int]]
    n_cws: int
    score: float = 0.0

    @property
    def words(self) -> list[int]:
        return [w for w, _ in self.ranked_words]

    def top_words(self, k: int = 10) -> list[int]:
        return [w for w, _ in self.ranked_words[:k]]


@dataclass(frozen=True)
class ClusterParams:
    overlap: float = 0.9
    min_cluster_size: int = 5
    min_topic_words: int = 10
    top_k_words: int = 10

    def __post_init__(self):
        if not 0.0 < self.overlap < 1.0:
            raise ValueError(f"overlap threshold must lie in (0, 1), got {self.overlap}")


@dataclass(frozen=True)
class SearchParams:
    """Second-stage min-hash search used to propose CWS pairs for clustering.

    ``eta=None`` uses ``eta_factor * overlap``; ``tables=None`` derives the
    table count from ``eta`` and ``tuple_size``. ``exact`` verifies all pairs.
    """

    tuple_size: int = 3
    eta: float | None = None
    eta_factor: float = 0.2
    tables: int | None = None
    seed: int = 0
    exact: bool = False

    def n_tables(self, overlap: float) -> int:
        if self.tables is not None:
            return self.tables
        eta = self.eta if self.eta is not None else self.eta_factor * overlap
        return num_tables(eta, self.tuple_size)


# --- CWS extraction ---------------------------------------------------------

def _inverted_index(inverted_file: Sequence[InvertedFileBag]) -> tuple[UnitIndex, list[int]]:
    indptr = [0]
    docs: list[int] = []
    freqs: list[int] = []
    for inv in inverted_file:
        docs.extend(inv.postings.keys())
        freqs.extend(inv.postings.values())
        indptr.append(len(docs))
    return UnitIndex(indptr, docs, freqs), [inv.word_id for inv in inverted_file]


def _table_sets(index: UnitIndex, word_ids: Sequence[int], params: SmhParams, x: int) -> list[tuple[int, ...]]:
    lo, hi = index.fingerprints(params.seed, x, params.tuple_size)
    sets = [tuple(word_ids[i] for i in g) for g in group_by_fingerprint(lo, hi)
            if len(g) >= params.min_set_size]
    sets.sort()
    return sets


def extract_cws(inverted_file: Sequence[InvertedFileBag], params: SmhParams,
                threads: int = 0) -> list[CoOccurringWordSet]:
    """Emit one CWS per bucket holding at least ``min_set_size`` words.

    Tables are built one at a time (or one per worker when ``threads > 1``)
    and discarded once their buckets are read. Output order is by table,
    then by word ids, regardless of ``threads``.
    """
    if not inverted_file:
        raise ValueError("inverted file is empty")
    index, word_ids = _inverted_index(inverted_file)
    tables = range(params.n_tables)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_table = list(pool.map(lambda x: _table_sets(index, word_ids, params, x), tables))
    else:
        per_table = (_table_sets(index, word_ids, params, x) for x in tables)

    out = []
    for x, sets in enumerate(per_table):
        for words in sets:
            out.append(CoOccurringWordSet(len(out), words, x))
    return out


# --- clustering -------------------------------------------------------------

def overlap_coefficient(a, b) -> float:
    a, b = set(a), set(b)
    if not a or not b:
        raise ValueError("overlap coefficient undefined for empty sets")
    return len(a & b) / min(len(a), len(b))


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def components(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return sorted(groups.values(), key=lambda g: g[0])


def _incidence(word_sets: Sequence[frozenset]) -> sp.csr_matrix:
    indptr = np.zeros(len(word_sets) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(s) for s in word_sets])
    indices = np.fromiter((w for s in word_sets for w in sorted(s)), dtype=np.int64, count=indptr[-1])
    n_cols = int(indices.max()) + 1 if len(indices) else 1
    return sp.csr_matrix((np.ones(len(indices), dtype=np.int32), indices, indptr),
                         shape=(len(word_sets), n_cols))


def _overlap_edges(S: sp.csr_matrix, pairs: np.ndarray, eps: float, chunk: int = 200_000) -> np.ndarray:
    sizes = np.diff(S.indptr)
    keep = []
    for lo in range(0, len(pairs), chunk):
        a, b = pairs[lo:lo + chunk, 0], pairs[lo:lo + chunk, 1]
        inter = np.asarray(S[a].multiply(S[b]).sum(axis=1)).ravel()
        ovr = inter / np.minimum(sizes[a], sizes[b])
        keep.append(pairs[lo:lo + chunk][ovr > eps])
    return np.concatenate(keep) if keep else np.empty((0, 2), dtype=np.int64)


def _exact_edges(S: sp.csr_matrix, eps: float, block: int = 2000) -> np.ndarray:
    sizes = np.diff(S.indptr)
    St = S.T.tocsc()
    keep = []
    for lo in range(0, S.shape[0], block):
        inter = (S[lo:lo + block] @ St).tocoo()
        a = inter.row.astype(np.int64) + lo
        b = inter.col.astype(np.int64)
        upper = b > a
        a, b, n = a[upper], b[upper], inter.data[upper]
        ovr = n / np.minimum(sizes[a], sizes[b])
        keep.append(np.column_stack((a, b))[ovr > eps])
    return np.concatenate(keep) if keep else np.empty((0, 2), dtype=np.int64)


def overlap_edges(word_sets: Sequence[frozenset], overlap: float, search: SearchParams) -> np.ndarray:
    """Index pairs ``(i, j)``, ``i < j``, of sets whose overlap coefficient exceeds ``overlap``.

    With ``search.exact`` every intersecting pair is checked; otherwise only
    min-hash candidate pairs are.
    """
    S = _incidence(word_sets)
    if search.exact:
        return _exact_edges(S, overlap)
    if len(word_sets) < 2:
        return np.empty((0, 2), dtype=np.int64)
    index = UnitIndex.from_sets(word_sets)
    pairs = candidate_positions(index, search.tuple_size, search.n_tables(overlap), search.seed)
    return _overlap_edges(S, pairs, overlap)


def cluster_cws(cws_list: Sequence[CoOccurringWordSet], cluster_params: ClusterParams = ClusterParams(),
                search: SearchParams = SearchParams()) -> list[TopicCluster]:
    """Connected components of the graph joining CWS with overlap above the threshold.

    CWS with identical word sets are merged up front (their overlap is 1),
    so the candidate search only sees distinct sets. Clusters are ordered
    by their smallest member id.
    """
    if not cws_list:
        return []
    distinct: dict[frozenset, int] = {}
    rep = []
    for c in cws_list:
        rep.append(distinct.setdefault(frozenset(c.words), len(distinct)))
    word_sets = list(distinct)

    uf = UnionFind(len(word_sets))
    for i, j in overlap_edges(word_sets, cluster_params.overlap, search).tolist():
        uf.union(i, j)

    members: dict[int, list[int]] = {}
    for c, r in zip(cws_list, rep):
        members.setdefault(uf.find(r), []).append(c.cws_id)
    groups = sorted((sorted(m) for m in members.values()), key=lambda m: m[0])
    return [TopicCluster(k, tuple(m)) for k, m in enumerate(groups)]


# --- topics -----------------------------------------------------------------

def form_topics(clusters: Sequence[TopicCluster], cws_list: Sequence[CoOccurringWordSet],
                cluster_params: ClusterParams = ClusterParams()) -> list[Topic]:
    """Turn large enough clusters into topics ranked by CWS support."""
    by_id = {c.cws_id: c for c in cws_list}
    topics = []
    for cluster in clusters:
        if cluster.size < cluster_params.min_cluster_size:
            continue
        support = Counter()
        for cid in cluster.members:
            support.update(by_id[cid].words)
        if len(support) < cluster_params.min_topic_words:
            continue
        ranked = sorted(support.items(), key=lambda ws: (-ws[1], ws[0]))
        topics.append(Topic(len(topics), ranked, cluster.size))
    return topics


def rank_topics(topics: Sequence[Topic], doc_freq: Mapping[int, int] | Sequence[int],
                top_k: int = 10) -> list[Topic]:
    """Sort topics by the mean document frequency of their top words.

    ``doc_freq`` maps word_id to document frequency. Scores are written to
    ``Topic.score``; ties keep ascending ``topic_id``.
    """
    for t in topics:
        top = t.top_words(top_k)
        t.score = float(sum(doc_freq[w] for w in top) / len(top)) if top else 0.0
    return sorted(topics, key=lambda t: (-t.score, t.topic_id))


# --- estimator --------------------------------------------------------------

class SampledMinHashing(BaseEstimator):
    """Discover topics as clusters of highly co-occurring word sets.

    Parameters
    ----------
    eta : float, default=0.04
        JCC threshold where a word set's collision probability is one half.
    tuple_size : int, default=2
        Min-hash values per bucket key.
    n_tables : int or None, default=None
        Number of hash tables; derived from ``eta`` and ``tuple_size`` if None.
    overlap : float, default=0.9
        CWS pairs with overlap coefficient strictly above this are linked.
    min_set_size : int, default=3
    min_cluster_size : int, default=5
    min_topic_words : int, default=10
    top_k_words : int, default=10
        Words averaged for the topic score.
    exact_clustering : bool, default=False
        Verify all CWS pairs instead of min-hash candidates.
    search_tuple_size, search_eta, search_tables
        Second-stage candidate search settings, see :class:`SearchParams`.
    n_jobs : int, default=0
        Worker threads for CWS extraction; 0 or 1 runs serially.
    random_state : int, default=0

    Attributes
    ----------
    n_tables_ : int
    cws_ : list of CoOccurringWordSet
    clusters_ : list of TopicCluster
    topics_ : list of Topic
        Ranked by descending score.
    document_frequency_ : ndarray of shape (n_words,)
    timings_ : dict
        Wall-clock seconds per stage of the last ``fit``.
    """

    def __init__(self, eta=0.04, tuple_size=2, n_tables=None, overlap=0.9, min_set_size=3,
                 min_cluster_size=5, min_topic_words=10, top_k_words=10, exact_clustering=False,
                 search_tuple_size=3, search_eta=None, search_tables=None, n_jobs=0, random_state=0):
        self.eta = eta
        self.tuple_size = tuple_size
        self.n_tables = n_tables
        self.overlap = overlap
        self.min_set_size = min_set_size
        self.min_cluster_size = min_cluster_size
        self.min_topic_words = min_topic_words
        self.top_k_words = top_k_words
        self.exact_clustering = exact_clustering
        self.search_tuple_size = search_tuple_size
        self.search_eta = search_eta
        self.search_tables = search_tables
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _params(self):
        seed = int(self.random_state or 0)
        smh = SmhParams(self.eta, self.tuple_size, self.n_tables, self.min_set_size, seed)
        clus = ClusterParams(self.overlap, self.min_cluster_size, self.min_topic_words, self.top_k_words)
        search = SearchParams(tuple_size=self.search_tuple_size, eta=self.search_eta,
                              tables=self.search_tables, seed=seed + 1, exact=self.exact_clustering)
        return smh, clus, search

    def fit(self, X, y=None):
        """Discover topics from a document-term count matrix.

        Parameters
        ----------
        X : {array-like, sparse matrix} of shape (n_documents, n_words)
            Non-negative integer word counts.
        """
        smh, clus, search = self._params()
        timings = {}
        t0 = time.perf_counter()
        X = check_array(X, accept_sparse="csc", dtype=np.int64)
        if X.shape[1] < 1:
            raise ValueError("X has no words")
        X = sp.csc_matrix(X)
        X.eliminate_zeros()
        if X.nnz and X.data.min() < 0:
            raise ValueError("word counts must be non-negative")
        X.sort_indices()
        inverted = []
        for w in range(X.shape[1]):
            lo, hi = X.indptr[w], X.indptr[w + 1]
            if hi > lo:
                inverted.append(InvertedFileBag(w, dict(zip(X.indices[lo:hi].tolist(),
                                                            X.data[lo:hi].tolist()))))
        if not inverted:
            raise ValueError("X contains no word occurrences")
        self.n_features_in_ = X.shape[1]
        self.document_frequency_ = np.diff(X.indptr)
        t1 = time.perf_counter()
        timings["inverted_file"] = t1 - t0

        self.n_tables_ = smh.n_tables
        self.cws_ = extract_cws(inverted, smh, threads=self.n_jobs)
        t2 = time.perf_counter()
        timings["extract_cws"] = t2 - t1

        self.clusters_ = cluster_cws(self.cws_, clus, search)
        t3 = time.perf_counter()
        timings["cluster_cws"] = t3 - t2

        topics = form_topics(self.clusters_, self.cws_, clus)
        t4 = time.perf_counter()
        timings["form_topics"] = t4 - t3

        self.topics_ = rank_topics(topics, self.document_frequency_, self.top_k_words)
        timings["rank_topics"] = time.perf_counter() - t4
        self.timings_ = timings
        return self

    def topic_words(self, vocabulary=None, top_k=None):
        """Ranked word lists of the discovered topics, as strings if a vocabulary is given."""
        check_is_fitted(self, "topics_")
        out = []
        for t in self.topics_:
            words = t.words if top_k is None else t.top_words(top_k)
            out.append([vocabulary.word_of(w) for w in words] if vocabulary is not None else words)
        return out


# --- file formats -----------------------------------------------------------

def write_topics(topics: Sequence[Topic], vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in topics:
            words = " ".join(f"{vocabulary.word_of(w)}:{s}" for w, s in t.ranked_words)
            fh.write(f"{t.score!r}\t{t.n_cws}\t{words}\n")


def read_topics(path) -> list[tuple[float, int, list[tuple[str, int]]]]:
    """Parse a topics file into ``(score, n_cws, [(word, support), ...])`` rows."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            score, n_cws, words = line.rstrip("\n").split("\t")
            ranked = []
            for item in words.split():
                w, _, s = item.rpartition(":")
                ranked.append((w, int(s)))
            rows.append((float(score), int(n_cws), ranked))
    return rows


def write_cws(cws_list: Sequence[CoOccurringWordSet], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in cws_list:
            fh.write(f"{c.table_index}\t{' '.join(map(str, c.words))}\n")
