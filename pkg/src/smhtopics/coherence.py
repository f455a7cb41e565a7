"""NPMI topic coherence from sliding-window co-occurrence counts."""

from __future__ import annotations

import logging
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Sequence

logger = logging.getLogger(__name__)


@dataclass
class WindowCounts:
    """Presence counts over all sliding windows of a reference corpus.

    ``pairs`` is keyed by sorted word pairs; use :meth:`pair` for lookup.
    """

    window_size: int
    total_windows: int = 0
    unigrams: Counter = field(default_factory=Counter)
    pairs: Counter = field(default_factory=Counter)

    def unigram(self, w) -> int:
        return self.unigrams.get(w, 0)

    def pair(self, a, b) -> int:
        if a == b:
            return self.unigrams.get(a, 0)
        key = (a, b) if a <= b else (b, a)
        return self.pairs.get(key, 0)

    def probability(self, a, b=None) -> float:
        c = self.unigram(a) if b is None else self.pair(a, b)
        return c / self.total_windows


def _windows(tokens: Sequence, size: int):
    if len(tokens) <= size:
        yield 0, len(tokens)
    else:
        for i in range(len(tokens) - size + 1):
            yield i, i + size


def count_windows(reference_corpus: Iterable[Sequence[Hashable]], window_size: int = 10,
                  vocabulary: Iterable[Hashable] | None = None) -> WindowCounts:
    """Count word and word-pair presence over sliding windows.

    Every window of ``window_size`` consecutive tokens counts once; a
    document shorter than the window contributes a single window and an
    empty document none. Words outside ``vocabulary`` still occupy window
    positions but are not counted.
    """
    if window_size < 2:
        raise ValueError("window_size must be >= 2")
    keep = None if vocabulary is None else frozenset(vocabulary)
    counts = WindowCounts(window_size)
    n_docs = 0
    for tokens in reference_corpus:
        tokens = list(tokens)
        n_docs += 1
        if not tokens:
            continue
        # running multiset of counted words in the current window
        inside: Counter = Counter()
        lo = hi = 0
        for start, stop in _windows(tokens, window_size):
            while hi < stop:
                w = tokens[hi]
                if keep is None or w in keep:
                    inside[w] += 1
                hi += 1
            while lo < start:
                w = tokens[lo]
                if keep is None or w in keep:
                    inside[w] -= 1
                    if not inside[w]:
                        del inside[w]
                lo += 1
            counts.total_windows += 1
            present = sorted(inside)
            counts.unigrams.update(present)
            counts.pairs.update(combinations(present, 2))
    if n_docs == 0 or counts.total_windows == 0:
        raise ValueError("reference corpus is empty")
    return counts


@dataclass(frozen=True)
class TopicCoherence:
    topic_id: int
    npmi: float
    k: int
    missing: tuple = ()


def pair_npmi(counts: WindowCounts, a, b) -> float:
    """NPMI of one word pair; -1 without joint occurrences, +1 if the pair fills every window."""
    joint = counts.pair(a, b)
    if joint == 0:
        return -1.0
    n = counts.total_windows
    if joint == n:
        return 1.0
    pmi = math.log(joint * n / (counts.unigram(a) * counts.unigram(b)))
    return pmi / -math.log(joint / n)


def npmi_topic(top_words: Sequence[Hashable], counts: WindowCounts, topic_id: int = 0) -> TopicCoherence:
    """Mean NPMI over all ``K*(K-1)/2`` pairs of a topic's top words."""
    k = len(top_words)
    if k < 2:
        raise ValueError("need at least two top words")
    missing = tuple(w for w in top_words if counts.unigram(w) == 0)
    if missing:
        logger.warning("topic %s: %d top words absent from reference corpus: %s",
                       topic_id, len(missing), " ".join(map(str, missing)))
    total = sum(pair_npmi(counts, a, b) for a, b in combinations(top_words, 2))
    return TopicCoherence(topic_id, total / (k * (k - 1) / 2), k, missing)


@dataclass(frozen=True)
class CoherenceSummary:
    n: int
    mean: float
    median: float
    std: float


def summarize(scores: Sequence[TopicCoherence]) -> CoherenceSummary:
    """Mean, median and population standard deviation of topic NPMI."""
    values = [s.npmi for s in scores]
    if not values:
        raise ValueError("no topics to summarize")
    return CoherenceSummary(len(values), statistics.fmean(values), statistics.median(values),
                            statistics.pstdev(values))


def write_report(scores: Sequence[TopicCoherence], top_words: Sequence[Sequence[str]], path) -> CoherenceSummary:
    summary = summarize(scores)
    with open(path, "w", encoding="utf-8") as fh:
        for s, words in zip(scores, top_words):
            fh.write(f"{s.topic_id}\t{s.npmi:.6f}\t{' '.join(words)}\n")
        fh.write(f"# n={summary.n}\tavg={summary.mean:.6f}\tmed={summary.median:.6f}\t"
                 f"std={summary.std:.6f}\n")
    return summary
