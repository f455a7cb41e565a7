"""Consistent-sampling MinHash over integer bags and bucketed hash tables.

Draw scheme
-----------
A bag with multiplicity ``f`` for element ``w`` is expanded into the units
``(w, 1) .. (w, f)``. Hash function ``m`` under ``seed`` assigns every unit a
64-bit draw::

    unit_key(w, z)    = mix64(mix64(w ^ ELEMENT_SALT) ^ (z * GOLDEN))
    function_key(s, m) = mix64(mix64(s ^ SEED_SALT) + (m + 1) * GOLDEN)
    draw(s, m, w, z)  = mix64(unit_key(w, z) ^ function_key(s, m))

where ``mix64`` is the splitmix64 finalizer and all arithmetic wraps modulo
2**64. The sample of a bag is the unit with the smallest
``(draw, w, z)`` triple. Because the draw of a unit does not depend on the
bag it belongs to, samples are consistent: a sub-bag that still contains
the winning unit picks the same unit.

Table ``x`` of a run with tuple size ``r`` uses hash functions
``x*r .. x*r + r - 1``. Its bucket key is a 128-bit fingerprint of the
ordered ``r`` samples (two independently salted 64-bit lanes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
GOLDEN = 0x9E3779B97F4A7C15
ELEMENT_SALT = 0x2545F4914F6CDD1D
SEED_SALT = 0x5851F42D4C957F2D
LANE_SALTS = (0x8CB92BA72F3D8DD7, 0xD6E8FEB86659FD93)
_MASK = (1 << 64) - 1


def mix64(x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """splitmix64 finalizer, vectorized over a uint64 array."""
    if out is None:
        out = np.array(x, dtype=np.uint64, copy=True)
    elif out is not x:
        np.copyto(out, x)
    tmp = np.empty_like(out)
    with np.errstate(over="ignore"):
        np.right_shift(out, np.uint64(30), out=tmp)
        out ^= tmp
        out *= _M1
        np.right_shift(out, np.uint64(27), out=tmp)
        out ^= tmp
        out *= _M2
        np.right_shift(out, np.uint64(31), out=tmp)
        out ^= tmp
    return out


def _mix64_int(x: int) -> int:
    x &= _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x


def function_key(seed: int, m: int) -> int:
    return _mix64_int(_mix64_int((seed & _MASK) ^ SEED_SALT) + (m + 1) * GOLDEN)


def unit_keys(elements: np.ndarray, units: np.ndarray) -> np.ndarray:
    e = np.asarray(elements, dtype=np.uint64) ^ np.uint64(ELEMENT_SALT)
    k = mix64(e)
    with np.errstate(over="ignore"):
        k ^= np.asarray(units, dtype=np.uint64) * np.uint64(GOLDEN)
    return mix64(k, out=k)


@dataclass(frozen=True)
class HashFunctionSpec:
    global_seed: int
    function_index: int

    @property
    def key(self) -> int:
        return function_key(self.global_seed, self.function_index)

    def draw(self, element: int, unit: int) -> int:
        k = unit_keys(np.array([element]), np.array([unit]))
        k ^= np.uint64(self.key)
        return int(mix64(k)[0])


# --- exact similarity measures ----------------------------------------------

def jaccard_bag(a: Mapping[int, int], b: Mapping[int, int]) -> float:
    """Weighted Jaccard ``sum(min) / sum(max)``; two empty bags give 1.0."""
    keys = set(a) | set(b)
    num = sum(min(a.get(w, 0), b.get(w, 0)) for w in keys)
    den = sum(max(a.get(w, 0), b.get(w, 0)) for w in keys)
    return 1.0 if den == 0 else num / den


def jcc_bags(bags: Sequence[Mapping[int, int]]) -> float:
    """Jaccard co-occurrence coefficient of ``k >= 2`` bags."""
    if len(bags) < 2:
        raise ValueError("need at least two bags")
    keys = set().union(*bags)
    num = sum(min(b.get(w, 0) for b in bags) for w in keys)
    den = sum(max(b.get(w, 0) for b in bags) for w in keys)
    return 1.0 if den == 0 else num / den


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    a, b = set(a), set(b)
    union = len(a | b)
    return 1.0 if union == 0 else len(a & b) / union


# --- filter design ----------------------------------------------------------

def num_tables(eta: float, r: int) -> int:
    """Number of tables putting the 0.5 collision point at ``eta``.

    >>> num_tables(0.08, 2)
    107
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if r < 1:
        raise ValueError(f"tuple size must be >= 1, got {r}")
    l = math.floor(math.log(0.5) / math.log1p(-(eta ** r)))
    return max(1, l)


def collision_probability(jcc: float, r: int, l: int) -> float:
    """Probability that bags with the given JCC share at least one of ``l`` r-tuples."""
    if not 0.0 <= jcc <= 1.0:
        raise ValueError(f"jcc must lie in [0, 1], got {jcc}")
    return 1.0 - (1.0 - jcc ** r) ** l


@dataclass(frozen=True)
class SmhParams:
    """Co-occurrence filter parameters.

    ``tables=None`` derives the table count from ``eta`` and ``tuple_size``.
    """

    eta: float = 0.04
    tuple_size: int = 2
    tables: int | None = None
    min_set_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.tuple_size < 1:
            raise ValueError("tuple_size must be >= 1")
        if self.tables is not None and self.tables < 1:
            raise ValueError("tables must be >= 1")
        if self.min_set_size < 2:
            raise ValueError("min_set_size must be >= 2")

    @property
    def n_tables(self) -> int:
        return self.tables if self.tables is not None else num_tables(self.eta, self.tuple_size)


# --- vectorized sampling ----------------------------------------------------

class UnitIndex:
    """All items' bags expanded into units, laid out contiguously per item.

    Units of one item are ordered by ``(element, unit)`` so the first
    minimum within a segment is the lexicographic tie-break winner.
    """

    def __init__(self, indptr, elements, multiplicities):
        indptr = np.asarray(indptr, dtype=np.int64)
        elements = np.asarray(elements, dtype=np.int64)
        mult = np.asarray(multiplicities, dtype=np.int64)
        n_items = len(indptr) - 1
        if n_items < 1:
            raise ValueError("no items to hash")
        if np.any(np.diff(indptr) <= 0):
            raise ValueError("cannot hash empty bag")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        # sort each segment by element
        owner = np.repeat(np.arange(n_items), np.diff(indptr))
        order = np.lexsort((elements, owner))
        elements, mult = elements[order], mult[order]

        self.n_items = n_items
        self.elements = np.repeat(elements, mult)
        unit_starts = np.cumsum(mult) - mult
        self.units = np.arange(len(self.elements), dtype=np.int64) - np.repeat(unit_starts, mult) + 1
        seg_units = np.add.reduceat(mult, indptr[:-1])
        self.starts = np.concatenate(([0], np.cumsum(seg_units)[:-1])).astype(np.int64)
        self.keys = unit_keys(self.elements, self.units)
        self._seglen = np.diff(np.append(self.starts, len(self.elements)))

    @classmethod
    def from_bags(cls, bags: Sequence[Mapping[int, int]]) -> "UnitIndex":
        indptr = [0]
        elements: list[int] = []
        mult: list[int] = []
        for bag in bags:
            for w, c in bag.items():
                elements.append(w)
                mult.append(c)
            indptr.append(len(elements))
        return cls(indptr, elements, mult)

    @classmethod
    def from_sets(cls, sets: Sequence[Iterable[int]]) -> "UnitIndex":
        return cls.from_bags([dict.fromkeys(s, 1) for s in sets])

    def sample(self, seed: int, m: int) -> np.ndarray:
        """Position (into ``elements``/``units``) of each item's sample under function ``m``."""
        draws = np.bitwise_xor(self.keys, np.uint64(function_key(seed, m)))
        mix64(draws, out=draws)
        seg_min = np.minimum.reduceat(draws, self.starts)
        hit = np.flatnonzero(draws == np.repeat(seg_min, self._seglen))
        return hit[np.searchsorted(hit, self.starts)]

    def samples(self, seed: int, functions: Iterable[int]) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        for m in functions:
            pos = self.sample(seed, m)
            out.append((self.elements[pos], self.units[pos]))
        return out

    def fingerprints(self, seed: int, table: int, r: int) -> tuple[np.ndarray, np.ndarray]:
        """128-bit tuple fingerprints (two uint64 lanes) of every item in one table."""
        lanes = [np.full(self.n_items, salt, dtype=np.uint64) for salt in LANE_SALTS]
        for elem, unit in self.samples(seed, range(table * r, table * r + r)):
            e = elem.astype(np.uint64)
            u = unit.astype(np.uint64)
            for lane in lanes:
                lane ^= e
                mix64(lane, out=lane)
                lane ^= u
                mix64(lane, out=lane)
        return lanes[0], lanes[1]


def minhash_signatures(bags: Sequence[Mapping[int, int]], M: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Samples of many bags at once.

    Returns ``(elements, units)``, each of shape ``(len(bags), M)``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if any(not b for b in bags):
        raise ValueError("cannot hash empty bag")
    index = UnitIndex.from_bags(bags)
    elements = np.empty((len(bags), M), dtype=np.int64)
    units = np.empty((len(bags), M), dtype=np.int64)
    for m in range(M):
        pos = index.sample(seed, m)
        elements[:, m] = index.elements[pos]
        units[:, m] = index.units[pos]
    return elements, units


def minhash_signature(bag: Mapping[int, int], M: int, seed: int = 0) -> list[tuple[int, int]]:
    """``M`` consistent samples ``(element, unit)`` of an integer bag."""
    if not bag:
        raise ValueError("cannot hash empty bag")
    elements, units = minhash_signatures([bag], M, seed)
    return list(zip(elements[0].tolist(), units[0].tolist()))


# --- bucket tables ----------------------------------------------------------

@dataclass
class BucketTable:
    table_index: int
    buckets: dict[tuple[int, int], list]

    def groups(self, min_size: int = 2) -> list[list]:
        return [members for members in self.buckets.values() if len(members) >= min_size]


def group_by_fingerprint(lo: np.ndarray, hi: np.ndarray) -> list[np.ndarray]:
    """Item positions grouped by equal (lo, hi) keys, each group ascending."""
    order = np.lexsort((np.arange(len(lo)), hi, lo))
    lo_s, hi_s = lo[order], hi[order]
    boundary = np.flatnonzero((lo_s[1:] != lo_s[:-1]) | (hi_s[1:] != hi_s[:-1])) + 1
    return np.split(order, boundary)


def bucket_table(index: UnitIndex, item_ids: Sequence, seed: int, table: int, r: int) -> BucketTable:
    lo, hi = index.fingerprints(seed, table, r)
    buckets = {}
    for group in group_by_fingerprint(lo, hi):
        first = group[0]
        buckets[(int(lo[first]), int(hi[first]))] = [item_ids[i] for i in group]
    return BucketTable(table, buckets)


def build_tables(items: Sequence[tuple[object, Mapping[int, int]]],
                 params: SmhParams) -> Iterator[BucketTable]:
    """Yield the ``l`` bucket tables one at a time."""
    if not items:
        raise ValueError("no items to hash")
    ids = [i for i, _ in items]
    index = UnitIndex.from_bags([b for _, b in items])
    for x in range(params.n_tables):
        yield bucket_table(index, ids, params.seed, x, params.tuple_size)


def _grouped_pairs(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """All ``(a, b)`` position pairs, ``a < b``, with equal keys, as an (n, 2) array."""
    order = np.lexsort((np.arange(len(lo)), hi, lo))
    lo_s, hi_s = lo[order], hi[order]
    new_group = np.ones(len(order), dtype=bool)
    new_group[1:] = (lo_s[1:] != lo_s[:-1]) | (hi_s[1:] != hi_s[:-1])
    group = np.cumsum(new_group)
    chunks = []
    d = 1
    while d < len(order):
        same = group[d:] == group[:-d]
        if not same.any():
            break
        k = np.flatnonzero(same)
        chunks.append(np.column_stack((order[k], order[k + d])))
        d += 1
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


def pairwise_candidates(sets: Sequence[tuple[object, Iterable[int]]], r: int, l: int,
                        seed: int = 0) -> list[tuple]:
    """Pairs of set ids sharing a bucket in at least one of ``l`` tables.

    Pairs are returned once, as ``(a, b)`` with ``a`` listed before ``b`` in
    ``sets``, sorted by those positions.
    """
    ids = [i for i, _ in sets]
    pairs = candidate_positions(UnitIndex.from_sets([s for _, s in sets]), r, l, seed) \
        if len(sets) >= 2 else np.empty((0, 2), dtype=np.int64)
    return [(ids[a], ids[b]) for a, b in pairs.tolist()]


def candidate_positions(index: UnitIndex, r: int, l: int, seed: int = 0) -> np.ndarray:
    """Deduplicated, sorted ``(a, b)`` item positions co-bucketed in some table."""
    n = index.n_items
    found = []
    for x in range(l):
        pairs = _grouped_pairs(*index.fingerprints(seed, x, r))
        if len(pairs):
            found.append(np.unique(pairs[:, 0] * n + pairs[:, 1]))
    if not found:
        return np.empty((0, 2), dtype=np.int64)
    codes = np.unique(np.concatenate(found))
    return np.column_stack((codes // n, codes % n))
