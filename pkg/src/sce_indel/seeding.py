"""Exact k-mer index of the reference, anchor enumeration and classification."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .seqgen import HomologousPath, ParameterError

_HASH_MULT = np.uint64(0x9E3779B97F4A7C15)


class AnchorClass(str, Enum):
    HOMOLOGOUS = "homologous"
    CLIPPING = "clipping"
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class Anchor:
    i: int
    j: int
    k: int


def _exact_packing(sigma: int, k: int) -> bool:
    return k * np.log2(sigma) <= 63.999


def window_codes(seq: np.ndarray, k: int, sigma: int) -> np.ndarray:
    """uint64 code per k-window (0-based start).  Exact base-sigma packing when it
    fits in 64 bits, otherwise a polynomial hash that callers must verify."""
    seq = np.asarray(seq, dtype=np.uint64)
    L = seq.size - k + 1
    if L <= 0:
        return np.zeros(0, np.uint64)
    exact = _exact_packing(sigma, k)
    mult = np.uint64(sigma) if exact else _HASH_MULT
    h = np.zeros(L, np.uint64)
    with np.errstate(over="ignore"):
        for t in range(k):
            h = h * mult + (seq[t:t + L] if exact else seq[t:t + L] + np.uint64(1))
    return h


class KmerIndex:
    """All k-windows of ``S`` keyed by code; positions are 1-based and sorted."""

    def __init__(self, S: np.ndarray, k: int, sigma: int = 4):
        S = np.asarray(S, dtype=np.uint8)
        if not 1 <= k <= S.size:
            raise ParameterError(f"need 1 <= k <= n, got k={k}, n={S.size}")
        self.S = S
        self.k = int(k)
        self.sigma = int(sigma)
        self.exact = _exact_packing(self.sigma, self.k)
        codes = window_codes(S, self.k, self.sigma)
        order = np.argsort(codes, kind="stable")
        self.codes = codes[order]
        self.positions = order.astype(np.int64) + 1

    def __len__(self) -> int:
        return int(self.positions.size)

    def lookup(self, window) -> np.ndarray:
        """Every start position of ``window`` in S."""
        window = np.asarray(window, dtype=np.uint8)
        if window.size != self.k:
            return np.zeros(0, np.int64)
        code = window_codes(window, self.k, self.sigma)[0]
        lo = np.searchsorted(self.codes, code, "left")
        hi = np.searchsorted(self.codes, code, "right")
        hits = np.sort(self.positions[lo:hi])
        if not self.exact:
            hits = np.array([x for x in hits if np.array_equal(self.S[x - 1:x - 1 + self.k], window)],
                            dtype=np.int64)
        return hits

    def table(self) -> dict:
        """Materialised window -> positions mapping (small inputs only)."""
        out: dict[tuple, list[int]] = {}
        for x in range(1, self.S.size - self.k + 2):
            out.setdefault(tuple(self.S[x - 1:x - 1 + self.k].tolist()), []).append(x)
        return out


def index_reference(S: np.ndarray, k: int, sigma: int = 4) -> KmerIndex:
    return KmerIndex(S, k, sigma)


@dataclass
class AnchorSet:
    i: np.ndarray
    j: np.ndarray
    k: int

    def __len__(self) -> int:
        return int(self.i.size)

    def __iter__(self):
        for a, b in zip(self.i.tolist(), self.j.tolist()):
            yield Anchor(a, b, self.k)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    def subset(self, mask) -> "AnchorSet":
        return AnchorSet(self.i[mask], self.j[mask], self.k)

    @classmethod
    def from_pairs(cls, pairs, k: int) -> "AnchorSet":
        pairs = sorted(set(map(tuple, pairs)))
        arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), k)


def find_anchors(index: KmerIndex, S_prime: np.ndarray) -> AnchorSet:
    """Every (i, j) with S[i:i+k-1] == S'[j:j+k-1], sorted by (i, j)."""
    k = index.k
    S_prime = np.asarray(S_prime, dtype=np.uint8)
    q = window_codes(S_prime, k, index.sigma)
    if q.size == 0:
        return AnchorSet(np.zeros(0, np.int64), np.zeros(0, np.int64), k)
    lo = np.searchsorted(index.codes, q, "left")
    hi = np.searchsorted(index.codes, q, "right")
    cnt = hi - lo
    qj = np.repeat(np.arange(1, q.size + 1, dtype=np.int64), cnt)
    start = np.repeat(lo, cnt)
    rel = np.arange(qj.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    ii = index.positions[start + rel]
    if not index.exact and ii.size:
        ok = np.ones(ii.size, bool)
        for t in range(k):
            ok &= index.S[ii - 1 + t] == S_prime[qj - 1 + t]
        ii, qj = ii[ok], qj[ok]
    order = np.lexsort((qj, ii))
    return AnchorSet(ii[order], qj[order], k)


def brute_force_anchors(S, S_prime, k: int) -> list[tuple[int, int]]:
    S = np.asarray(S).tolist()
    T = np.asarray(S_prime).tolist()
    return [(i + 1, j + 1)
            for i in range(len(S) - k + 1)
            for j in range(len(T) - k + 1)
            if S[i:i + k] == T[j:j + k]]


def _overlap_counts(i, j, k: int, path: HomologousPath):
    """(|A ∩ B|, |B|) per anchor, A its diagonal and B the path points in its box."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    inter = np.zeros(i.size, np.int64)
    box = np.zeros(i.size, np.int64)
    top = j + k - 1
    for t in range(k):
        ylo, yhi = path.column_range(i + t)
        inter += (ylo <= j + t) & (j + t <= yhi)
        box += np.clip(np.minimum(yhi, top) - np.maximum(ylo, j) + 1, 0, None)
    return inter, box


_CLASS_ORDER = (AnchorClass.HOMOLOGOUS, AnchorClass.CLIPPING, AnchorClass.SPURIOUS)


def class_codes(anchors: AnchorSet, path: HomologousPath) -> np.ndarray:
    """0 homologous, 1 clipping, 2 spurious, parallel to ``anchors``."""
    inter, box = _overlap_counts(anchors.i, anchors.j, anchors.k, path)
    codes = np.ones(len(anchors), np.int8)
    codes[(inter == anchors.k) & (box == anchors.k)] = 0
    codes[inter == 0] = 2
    return codes


def classify_many(anchors: AnchorSet, path: HomologousPath) -> list[AnchorClass]:
    return [_CLASS_ORDER[c] for c in class_codes(anchors, path).tolist()]


def classify_anchor(a: Anchor, path: HomologousPath) -> AnchorClass:
    return classify_many(AnchorSet(np.array([a.i]), np.array([a.j]), a.k), path)[0]


def count_by_class(anchors: AnchorSet, path: HomologousPath) -> tuple[int, int, int]:
    counts = np.bincount(class_codes(anchors, path), minlength=3)
    return int(counts[0]), int(counts[1]), int(counts[2])


def spurious_match_frequency(k: int, sigma: int, draws: int, rng: np.random.Generator,
                             batch: int = 1 << 20) -> tuple[int, int]:
    """Match count over ``draws`` pairs of independent uniform k-windows."""
    hits = 0
    left = draws
    while left > 0:
        b = min(batch, left)
        a = rng.integers(0, sigma, size=(b, k), dtype=np.uint8)
        c = rng.integers(0, sigma, size=(b, k), dtype=np.uint8)
        hits += int(np.all(a == c, axis=1).sum())
        left -= b
    return hits, draws
