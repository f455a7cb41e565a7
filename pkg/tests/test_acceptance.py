"""Exit criteria for the topic-discovery pipeline, one test per criterion."""

import math
import time
from collections import deque

import numpy as np
import pytest

from smhtopics.cli import main
from smhtopics.coherence import count_windows, npmi_topic
from smhtopics.corpus import bags_to_matrix, ingest
from smhtopics.discovery import (ClusterParams, CoOccurringWordSet, SampledMinHashing, SearchParams,
                                 cluster_cws, overlap_coefficient)
from smhtopics.minhash import (UnitIndex, collision_probability, jaccard_bag, jcc_bags,
                               minhash_signatures, num_tables)
from smhtopics.synth import PlantedSpec, generate, recovered_topics


def planted_matrix(**kwargs):
    pc = generate(PlantedSpec(**kwargs))
    vocab, bags = ingest(pc.docs)
    return pc, vocab, bags_to_matrix(bags, len(vocab))


def random_bag(rng, universe=50, max_mult=5):
    mult = rng.integers(0, max_mult + 1, size=universe)
    return {w: int(m) for w, m in enumerate(mult) if m}


def best_fit_time(X, repeats, **params):
    best = math.inf
    model = None
    for _ in range(repeats):
        t = time.perf_counter()
        model = SampledMinHashing(n_jobs=0, **params).fit(X)
        best = min(best, time.perf_counter() - t)
    return best, model


# 1 ---------------------------------------------------------------------------

def test_ac1_table_counts(criterion):
    expected = {(0.04, 2): 432, (0.06, 2): 192, (0.08, 2): 107, (0.10, 2): 68,
                (0.08, 3): 1353, (0.08, 4): 16922}
    got = {k: num_tables(*k) for k in expected}
    criterion("AC1 table-count formula", got == expected, str(got))
    assert got == expected


# 2 ---------------------------------------------------------------------------

def test_ac2_estimator_law(criterion):
    rng = np.random.default_rng(2024)
    pairs = []
    while len(pairs) < 100:
        a, b = random_bag(rng), random_bag(rng)
        if a and b:
            pairs.append((a, b))
    el, un = minhash_signatures([b for p in pairs for b in p], 2000, seed=17)
    errors = []
    for i, (a, b) in enumerate(pairs):
        match = np.mean((el[2 * i] == el[2 * i + 1]) & (un[2 * i] == un[2 * i + 1]))
        errors.append(abs(match - jaccard_bag(a, b)))
    ok = sum(e <= 0.05 for e in errors)
    criterion("AC2 estimator law", ok >= 95, f"{ok}/100 pairs within 0.05 (max err {max(errors):.4f})")
    assert ok >= 95


# 3 ---------------------------------------------------------------------------

def test_ac3_beyond_pairwise_law(criterion):
    rng = np.random.default_rng(77)
    triples = []
    while len(triples) < 100:
        t = [random_bag(rng) for _ in range(3)]
        if all(t):
            triples.append(t)
    el, un = minhash_signatures([b for t in triples for b in t], 2000, seed=5)
    errors = []
    for i, t in enumerate(triples):
        e, u = el[3 * i:3 * i + 3], un[3 * i:3 * i + 3]
        same = (e[0] == e[1]) & (e[1] == e[2]) & (u[0] == u[1]) & (u[1] == u[2])
        errors.append(abs(np.mean(same) - jcc_bags(t)))
    ok = sum(e <= 0.05 for e in errors)
    criterion("AC3 beyond-pairwise law", ok == 100, f"{ok}/100 triples within 0.05 (max err {max(errors):.4f})")
    assert ok == 100


# 4 ---------------------------------------------------------------------------

def _triple_with_jcc(a, rest, offset):
    """Three bags sharing ``a`` units of one element plus private mass ``rest``."""
    return [{offset: a, offset + 1 + i: r} for i, r in enumerate(rest)]


def test_ac4_filter_shape(criterion):
    eta, r, l = 0.08, 2, 107
    designs = {eta / 2: (1, (8, 8, 8)), eta: (2, (8, 8, 7)), 2 * eta: (4, (7, 7, 7))}
    trials = 1000
    lines, ok = [], True
    for s, (a, rest) in designs.items():
        bags = []
        for t in range(trials):
            bags += _triple_with_jcc(a, rest, offset=10 * t)
        assert jcc_bags(bags[:3]) == pytest.approx(s)
        index = UnitIndex.from_bags(bags)
        hit = np.zeros(trials, dtype=bool)
        for x in range(l):
            lo, hi = index.fingerprints(seed=3, table=x, r=r)
            lo, hi = lo.reshape(trials, 3), hi.reshape(trials, 3)
            hit |= (lo[:, 0] == lo[:, 1]) & (lo[:, 1] == lo[:, 2]) & (hi[:, 0] == hi[:, 1]) & (hi[:, 1] == hi[:, 2])
        freq = hit.mean()
        theory = collision_probability(s, r, l)
        good = abs(freq - theory) <= 0.05
        if s == eta / 2:
            good &= freq <= 0.2
        if s == 2 * eta:
            good &= freq >= 0.9
        ok &= good
        lines.append(f"s={s:.2f}: {freq:.3f} vs {theory:.3f}")
    criterion("AC4 filter shape", ok, "; ".join(lines))
    assert ok


# 5 ---------------------------------------------------------------------------

def test_ac5_planted_recovery(criterion):
    pc, vocab, X = planted_matrix(n_topics=10, words_per_topic=20, n_docs=1000, doc_length=50,
                                  noise_fraction=0.1, seed=0)
    model = SampledMinHashing(eta=0.04, tuple_size=2, overlap=0.9, random_state=0).fit(X)
    rec = recovered_topics(model.topic_words(vocab, top_k=10), [set(t) for t in pc.topics])
    criterion("AC5 planted-topic recovery", sum(rec) >= 9,
              f"{sum(rec)}/10 recovered from {len(model.topics_)} topics")
    assert sum(rec) >= 9


# 6 ---------------------------------------------------------------------------

def test_ac6_parameter_trends(criterion):
    _, _, X = planted_matrix(seed=0, leak_fraction=0.05)
    etas = (0.04, 0.06, 0.08, 0.10)
    n_topics, times = [], []
    for eta in etas:
        secs, model = best_fit_time(X, 3, eta=eta, tuple_size=2, overlap=0.9, random_state=0)
        n_topics.append(len(model.topics_))
        times.append(secs)
    non_increasing = all(b <= a for a, b in zip(n_topics, n_topics[1:]))
    decreasing = all(b < a for a, b in zip(times, times[1:]))
    criterion("AC6 parameter trends", non_increasing and decreasing,
              f"topics {n_topics}, seconds {[round(t, 3) for t in times]}")
    assert non_increasing and decreasing


# 7 ---------------------------------------------------------------------------

def _random_cws(seed, n=200, pools=10, pool_size=20, sizes=(3, 8)):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        p = rng.integers(pools)
        k = rng.integers(sizes[0], sizes[1] + 1)
        words = sorted((p * pool_size + rng.choice(pool_size, k, replace=False)).tolist())
        out.append(CoOccurringWordSet(i, tuple(words), 0))
    return out


def _brute_components(cws, eps):
    n = len(cws)
    adj = [[j for j in range(n) if j != i and overlap_coefficient(cws[i].words, cws[j].words) > eps]
           for i in range(n)]
    seen, comps = set(), []
    for s in range(n):
        if s in seen:
            continue
        seen.add(s)
        comp, queue = [], deque([s])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        comps.append(tuple(sorted(comp)))
    return sorted(comps)


def test_ac7_clustering_oracle(criterion):
    eps = 0.9
    params = ClusterParams(overlap=eps)
    exact_ok = prob_ok = 0
    for seed in range(100):
        cws = _random_cws(seed)
        truth = _brute_components(cws, eps)
        exact = sorted(c.members for c in cluster_cws(cws, params, SearchParams(exact=True)))
        approx = sorted(c.members for c in cluster_cws(cws, params, SearchParams(seed=seed)))
        exact_ok += exact == truth
        prob_ok += approx == truth
    ok = exact_ok == 100 and prob_ok >= 95
    criterion("AC7 clustering oracle", ok, f"exact {exact_ok}/100, min-hash candidates {prob_ok}/100")
    assert ok


# 8 ---------------------------------------------------------------------------

def _oracle_npmi(words, docs, size):
    windows = []
    for doc in docs:
        if len(doc) <= size:
            windows.append(set(doc))
        else:
            windows += [set(doc[i:i + size]) for i in range(len(doc) - size + 1)]
    n = len(windows)
    total = 0.0
    pairs = 0
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            a, b = words[i], words[j]
            ca = sum(a in w for w in windows)
            cb = sum(b in w for w in windows)
            cab = sum(a in w and b in w for w in windows)
            if cab == 0:
                v = -1.0
            elif cab == n:
                v = 1.0
            else:
                v = math.log((cab / n) / ((ca / n) * (cb / n))) / -math.log(cab / n)
            total += v
            pairs += 1
    return total / pairs


def test_ac8_npmi_oracle(criterion):
    rng = np.random.default_rng(8)
    vocab = [f"w{i}" for i in range(60)]
    docs, remaining = [], 1000
    while remaining:
        n = min(remaining, int(rng.integers(5, 80)))
        docs.append([vocab[j] for j in rng.zipf(1.3, size=n) % 60])
        remaining -= n
    assert sum(map(len, docs)) == 1000
    counts = count_windows(docs, window_size=10)
    worst = 0.0
    for _ in range(20):
        words = [vocab[j] for j in rng.choice(60, 10, replace=False)]
        worst = max(worst, abs(npmi_topic(words, counts).npmi - _oracle_npmi(words, docs, 10)))
    criterion("AC8 NPMI oracle", worst <= 1e-12, f"max |diff| {worst:.2e} over 20 topics")
    assert worst <= 1e-12


# 9 ---------------------------------------------------------------------------

def test_ac9_linear_scaling(criterion):
    sizes = (5000, 10000, 20000)
    times = []
    for n in sizes:
        _, _, X = planted_matrix(n_docs=n, seed=0)
        secs, _ = best_fit_time(X, 2, eta=0.04, tuple_size=2, overlap=0.9, random_state=0)
        times.append(secs)
    N, T = np.array(sizes, float), np.array(times)
    a, b = np.polyfit(N, T, 1)
    r2 = 1 - np.sum((T - (a * N + b)) ** 2) / np.sum((T - T.mean()) ** 2)
    ratios = [t2 / t1 for t1, t2 in zip(times, times[1:])]
    ok = r2 >= 0.95 and all(q <= 2.5 for q in ratios)
    criterion("AC9 linear scaling", ok,
              f"seconds {[round(t, 2) for t in times]}, R^2={r2:.4f}, doubling ratios {[round(q, 2) for q in ratios]}")
    assert ok


# 10 --------------------------------------------------------------------------

def test_ac10_determinism(criterion, tmp_path):
    assert main(["synth", "--output-dir", str(tmp_path / "s"), "--seed", "11"]) == 0
    assert main(["ingest", "--input", str(tmp_path / "s" / "corpus.tsv"), "--output-dir", str(tmp_path / "o")]) == 0
    topics = tmp_path / "topics.tsv"
    assert main(["discover", "--bags", str(tmp_path / "o" / "bags.txt"), "--vocab", str(tmp_path / "o" / "vocab.tsv"),
                 "--output", str(topics), "--seed", "3"]) == 0
    first = topics.read_bytes()
    manifest = tmp_path / "topics.tsv.manifest"
    saved = manifest.read_bytes()
    topics.unlink()
    assert main(["rerun", str(manifest)]) == 0
    same = topics.read_bytes() == first and manifest.read_bytes() == saved
    criterion("AC10 determinism", same, f"{len(first)} bytes, identical={same}")
    assert same
