"""Corpus ingestion: vocabulary, bag-of-words documents and inverted file bags.

Tokenization, lowercasing and lemmatization happen upstream. The functions
here only count tokens, restrict the vocabulary to the ``D`` most frequent
non-stopword tokens and transpose documents into per-word occurrence bags.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class CorpusError(ValueError):
    """Raised for malformed or empty corpora."""


@dataclass(frozen=True)
class VocabEntry:
    word: str
    word_id: int
    corpus_frequency: int
    document_frequency: int


@dataclass(frozen=True)
class Vocabulary:
    """Restricted vocabulary, ordered by descending corpus frequency.

    ``entries[i].word_id == i`` always holds.
    """

    entries: tuple[VocabEntry, ...]

    def __post_init__(self):
        index = {}
        for i, e in enumerate(self.entries):
            if e.word_id != i:
                raise CorpusError(f"word_id {e.word_id} at position {i}; ids must be dense")
            if e.word in index:
                raise CorpusError(f"duplicate word {e.word!r}")
            index[e.word] = i
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word) -> bool:
        return word in self._index

    def id_of(self, word: str) -> int:
        return self._index[word]

    def word_of(self, word_id: int) -> str:
        return self.entries[word_id].word

    @property
    def words(self) -> list[str]:
        return [e.word for e in self.entries]


@dataclass(frozen=True)
class BagOfWords:
    """One document as ``word_id -> multiplicity``. Zero counts are absent."""

    doc_id: int
    terms: Mapping[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class InvertedFileBag:
    """Occurrence pattern of one word: ``doc_id -> in-document frequency``."""

    word_id: int
    postings: Mapping[int, int]

    @property
    def max_multiplicity(self) -> int:
        return max(self.postings.values())

    @property
    def mass(self) -> int:
        return sum(self.postings.values())


def ingest(tokenized_docs: Iterable[tuple[object, Sequence[str]]],
           stopwords: Iterable[str] = (),
           vocab_size: int = 10_000) -> tuple[Vocabulary, list[BagOfWords]]:
    """Build the restricted vocabulary and per-document bags.

    Parameters
    ----------
    tokenized_docs : iterable of (doc_id, tokens)
        Documents in corpus order. ``doc_id`` labels must be unique; the
        returned bags are indexed by position, so ``bags[i].doc_id == i``.
    stopwords : iterable of str
        Tokens dropped before counting.
    vocab_size : int
        Number ``D`` of most frequent tokens kept. Frequency ties at the
        cutoff are broken by lexicographic word order.

    Returns
    -------
    vocabulary : Vocabulary
    bags : list of BagOfWords
        One bag per input document, empty if none of its tokens survived.
    """
    if vocab_size < 1:
        raise CorpusError("vocab_size must be >= 1")
    stop = frozenset(stopwords)
    seen_ids = set()
    doc_counts: list[Counter] = []
    corpus_freq: Counter = Counter()
    doc_freq: Counter = Counter()
    n_tokens = 0
    for doc_id, tokens in tokenized_docs:
        if doc_id in seen_ids:
            raise CorpusError(f"duplicate doc_id {doc_id!r}")
        seen_ids.add(doc_id)
        counts = Counter(t for t in tokens if t not in stop)
        n_tokens += len(tokens)
        corpus_freq.update(counts)
        doc_freq.update(counts.keys())
        doc_counts.append(counts)

    if not doc_counts:
        raise CorpusError("empty corpus")
    if not corpus_freq:
        raise CorpusError("empty corpus after filtering")

    ranked = sorted(corpus_freq.items(), key=lambda kv: (-kv[1], kv[0]))[:vocab_size]
    vocab = Vocabulary(tuple(
        VocabEntry(word, i, freq, doc_freq[word]) for i, (word, freq) in enumerate(ranked)
    ))

    bags = []
    for i, counts in enumerate(doc_counts):
        terms = {vocab.id_of(w): c for w, c in counts.items() if w in vocab}
        bags.append(BagOfWords(i, dict(sorted(terms.items()))))
    return vocab, bags


def build_inverted_file(bags: Sequence[BagOfWords], vocab_size: int) -> list[InvertedFileBag]:
    """Transpose document bags into inverted file bags.

    Words with no occurrences produce no entry; the result is sorted by
    ``word_id`` and postings are keyed by bag position.
    """
    postings: dict[int, dict[int, int]] = {}
    for i, bag in enumerate(bags):
        for w, c in bag.terms.items():
            if not 0 <= w < vocab_size:
                raise CorpusError(f"word_id {w} outside vocabulary of size {vocab_size}")
            if c < 1:
                raise CorpusError(f"non-positive multiplicity {c} for word {w} in doc {i}")
            postings.setdefault(w, {})[i] = c
    return [InvertedFileBag(w, postings[w]) for w in sorted(postings)]


def invert_back(inverted_file: Sequence[InvertedFileBag], n_docs: int) -> list[BagOfWords]:
    """Transpose an inverted file back into ``n_docs`` document bags."""
    terms: list[dict[int, int]] = [{} for _ in range(n_docs)]
    for inv in sorted(inverted_file, key=lambda b: b.word_id):
        for d, c in inv.postings.items():
            terms[d][inv.word_id] = c
    return [BagOfWords(i, t) for i, t in enumerate(terms)]


def document_frequency(word_id: int, inverted_file) -> int:
    """Number of documents containing ``word_id``.

    ``inverted_file`` is a sequence of :class:`InvertedFileBag` or a mapping
    from word_id to one.
    """
    if isinstance(inverted_file, Mapping):
        bag = inverted_file.get(word_id)
    else:
        bag = next((b for b in inverted_file if b.word_id == word_id), None)
    if bag is None:
        raise KeyError(f"word not indexed: {word_id}")
    return len(bag.postings)


def bags_to_matrix(bags: Sequence[BagOfWords], vocab_size: int) -> sp.csr_matrix:
    """Document-term count matrix of shape ``(n_docs, vocab_size)``."""
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for bag in bags:
        for w in sorted(bag.terms):
            indices.append(w)
            data.append(bag.terms[w])
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(bags), vocab_size),
    )


def inverted_file_from_matrix(X: sp.spmatrix) -> list[InvertedFileBag]:
    csc = sp.csc_matrix(X)
    csc.sort_indices()
    out = []
    for w in range(csc.shape[1]):
        lo, hi = csc.indptr[w], csc.indptr[w + 1]
        if hi > lo:
            out.append(InvertedFileBag(w, dict(zip(csc.indices[lo:hi].tolist(),
                                                   csc.data[lo:hi].tolist()))))
    return out


# --- file formats -----------------------------------------------------------

def read_corpus(path: str | os.PathLike) -> Iterator[tuple[str, list[str]]]:
    """Stream ``doc_id<TAB>token token ...`` lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            doc_id, sep, text = line.partition("\t")
            if not sep:
                raise CorpusError(f"{path}:{lineno}: expected doc_id<TAB>tokens")
            yield doc_id, text.split()


def write_corpus(docs: Iterable[tuple[object, Sequence[str]]], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, tokens in docs:
            fh.write(f"{doc_id}\t{' '.join(tokens)}\n")


def read_stopwords(path: str | os.PathLike | None) -> set[str]:
    if path is None:
        return set()
    with open(path, encoding="utf-8") as fh:
        return {w for line in fh for w in line.split()}


def write_bags(bags: Sequence[BagOfWords], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for bag in bags:
            items = " ".join(f"{w}:{bag.terms[w]}" for w in sorted(bag.terms))
            fh.write(f"{len(bag.terms)} {items}".rstrip() + "\n")


def read_bags(path: str | os.PathLike) -> list[BagOfWords]:
    bags = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                raise CorpusError(f"{path}:{lineno}: missing term count")
            n = int(fields[0])
            if n != len(fields) - 1:
                raise CorpusError(f"{path}:{lineno}: declared {n} terms, found {len(fields) - 1}")
            terms = {}
            for item in fields[1:]:
                w, _, c = item.partition(":")
                terms[int(w)] = int(c)
            bags.append(BagOfWords(len(bags), terms))
    return bags


def write_vocabulary(vocab: Vocabulary, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in vocab.entries:
            fh.write(f"{e.word}\t{e.word_id}\t{e.corpus_frequency}\t{e.document_frequency}\n")


def read_vocabulary(path: str | os.PathLike) -> Vocabulary:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            word, wid, cf, df = line.rstrip("\n").split("\t")
            entries.append(VocabEntry(word, int(wid), int(cf), int(df)))
    entries.sort(key=lambda e: e.word_id)
    return Vocabulary(tuple(entries))
