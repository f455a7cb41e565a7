"""Planted-topic corpus generator used as recovery ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import write_corpus


@dataclass(frozen=True)
class PlantedSpec:
    """Shape of a synthetic corpus.

    Each document is assigned one planted topic, uniformly at random but
    with topic counts balanced to within one document. ``noise_fraction`` of
    its tokens come from a separate noise vocabulary and ``leak_fraction``
    from one other, randomly chosen planted topic; the rest come from its
    own topic. ``zipf_exponent > 0`` replaces uniform word draws within a
    topic by a Zipf-like profile.
    """

    n_topics: int = 10
    words_per_topic: int = 20
    n_docs: int = 1000
    doc_length: int = 50
    noise_words: int = 100
    noise_fraction: float = 0.1
    seed: int = 0
    leak_fraction: float = 0.0
    zipf_exponent: float = 0.0

    def __post_init__(self):
        for name in ("n_topics", "words_per_topic", "n_docs", "noise_words"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.doc_length < 5:
            raise ValueError("doc_length must be >= 5")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")
        if not 0.0 <= self.leak_fraction < 1.0 or self.noise_fraction + self.leak_fraction >= 1.0:
            raise ValueError("leak_fraction must lie in [0, 1 - noise_fraction)")
        if self.leak_fraction > 0 and self.n_topics < 2:
            raise ValueError("leaking needs at least two topics")


@dataclass
class PlantedCorpus:
    docs: list[tuple[int, list[str]]]
    topics: list[list[str]]
    doc_topics: np.ndarray


def topic_word(topic: int, j: int) -> str:
    return f"t{topic}w{j}"


def generate(spec: PlantedSpec) -> PlantedCorpus:
    rng = np.random.default_rng(spec.seed)
    topics = [[topic_word(t, j) for j in range(spec.words_per_topic)] for t in range(spec.n_topics)]
    noise = [f"noise{j}" for j in range(spec.noise_words)]

    if spec.zipf_exponent > 0:
        p = 1.0 / np.arange(1, spec.words_per_topic + 1) ** spec.zipf_exponent
        p /= p.sum()
    else:
        p = None

    n_noise = int(round(spec.noise_fraction * spec.doc_length))
    n_leak = int(round(spec.leak_fraction * spec.doc_length))
    n_own = spec.doc_length - n_noise - n_leak

    # balanced counts in random order: each document's topic is still uniform
    doc_topics = rng.permutation(np.arange(spec.n_docs) % spec.n_topics)
    docs = []
    for d, t in enumerate(doc_topics):
        own = rng.choice(spec.words_per_topic, size=n_own, p=p)
        tokens = [topics[t][j] for j in own]
        if n_leak:
            other = (t + 1 + rng.integers(spec.n_topics - 1)) % spec.n_topics
            tokens += [topics[other][j] for j in rng.choice(spec.words_per_topic, size=n_leak, p=p)]
        tokens += [noise[j] for j in rng.integers(spec.noise_words, size=n_noise)]
        rng.shuffle(tokens)
        docs.append((d, tokens))
    return PlantedCorpus(docs, topics, doc_topics)


def write_planted(corpus: PlantedCorpus, corpus_path, truth_path) -> None:
    write_corpus(corpus.docs, corpus_path)
    with open(truth_path, "w", encoding="utf-8") as fh:
        for t, words in enumerate(corpus.topics):
            fh.write(f"{t}\t{' '.join(words)}\n")


def read_ground_truth(path) -> list[set[str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                _, words = line.rstrip("\n").split("\t")
                out.append(set(words.split()))
    return out


def recovered_topics(topic_words, truth) -> list[bool]:
    """For each planted set, whether some topic's top words all fall inside it."""
    return [any(words and set(words) <= planted for words in topic_words) for planted in truth]
