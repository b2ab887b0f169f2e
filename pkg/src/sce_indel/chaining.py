"""Optimal linear-gap-cost chaining.

A chain is valid when ``i`` strictly increases and ``j`` never decreases.
Its score is ``u - xi * (i_u - i_1 + j_u - j_1)`` for ``u`` anchors.

Ties (scores within ``TIE_TOL``) resolve deterministically: extending a chain
beats starting a new one, and among predecessors or end anchors the one
earliest in ``(i, j)`` order wins.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .seeding import AnchorSet
from .seqgen import ParameterError

TIE_TOL = 1e-9
BRUTE_FORCE_LIMIT = 20


class InvalidChainError(ValueError):
    pass


@dataclass
class Chain:
    i: np.ndarray
    j: np.ndarray
    score: float = 0.0
    k: int = 0
    ops: int = field(default=0, compare=False)

    def __post_init__(self):
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.i.size)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    @classmethod
    def from_pairs(cls, pairs, k: int = 0, xi: float | None = None) -> "Chain":
        arr = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
        c = cls(arr[:, 0], arr[:, 1], 0.0, k)
        if xi is not None:
            c.score = score_chain(c, xi)
        return c

    def is_valid(self) -> bool:
        return bool(np.all(np.diff(self.i) > 0) and np.all(np.diff(self.j) >= 0))


def empty_chain(k: int = 0) -> Chain:
    return Chain(np.zeros(0, np.int64), np.zeros(0, np.int64), 0.0, k)


def score_chain(chain: Chain, xi: float) -> float:
    if not chain.is_valid():
        raise InvalidChainError(f"anchors are not monotone: {chain.pairs()}")
    u = len(chain)
    if u == 0:
        return 0.0
    return u - xi * float(chain.i[-1] - chain.i[0] + chain.j[-1] - chain.j[0])


def score_chain_by_gaps(chain: Chain, xi: float) -> float:
    """Same score summed gap by gap."""
    if not chain.is_valid():
        raise InvalidChainError(f"anchors are not monotone: {chain.pairs()}")
    gaps = np.diff(chain.i) + np.diff(chain.j)
    return len(chain) - float(np.sum(xi * gaps.astype(float)))


def _backtrace(anchors: AnchorSet, dp: np.ndarray, pred: np.ndarray, k: int, ops: int) -> Chain:
    best = float(dp.max())
    end = int(np.flatnonzero(dp >= best - TIE_TOL)[0])
    idx = []
    v = end
    while v >= 0:
        idx.append(v)
        v = int(pred[v])
    idx.reverse()
    idx = np.array(idx, dtype=np.int64)
    return Chain(anchors.i[idx], anchors.j[idx], float(dp[end]), k, ops)


def _sorted(anchors: AnchorSet) -> AnchorSet:
    order = np.lexsort((anchors.j, anchors.i))
    if np.all(order == np.arange(order.size)):
        return anchors
    return AnchorSet(anchors.i[order], anchors.j[order], anchors.k)


def optimal_chain_quadratic(anchors: AnchorSet, xi: float) -> Chain:
    anchors = _sorted(anchors)
    N = len(anchors)
    if N == 0:
        return empty_chain(anchors.k)
    I = anchors.i.tolist()
    J = anchors.j.tolist()
    dp = np.zeros(N)
    pred = np.full(N, -1, np.int64)
    ops = 0
    for v in range(N):
        best, arg = -np.inf, -1
        for u in range(v):
            ops += 1
            if I[u] < I[v] and J[u] <= J[v]:
                val = dp[u] - xi * (I[v] - I[u] + J[v] - J[u])
                if val > best + TIE_TOL:
                    best, arg = val, u
        if arg >= 0 and best > -TIE_TOL:
            dp[v] = 1.0 + best
            pred[v] = arg
        else:
            dp[v] = 1.0
    return _backtrace(anchors, dp, pred, anchors.k, ops)


@numba.njit(cache=True, inline="always")
def _beats(k1, a1, k2, a2, tol):
    if k1 > k2 + tol:
        return True
    if k2 > k1 + tol:
        return False
    return a1 >= 0 and (a2 < 0 or a1 < a2)


@numba.njit(cache=True)
def _fenwick_chain(I, J, rank, size, xi, tol):
    """Separable DP with a prefix-max Fenwick tree over j ranks.

    Anchors sharing an i are all queried before any is inserted, so equal
    i never chain.  Returns (dp, pred, structure operations).
    """
    N = I.size
    key = np.full(size + 1, -np.inf)
    arg = np.full(size + 1, -1, np.int64)
    dp = np.zeros(N)
    pred = np.full(N, -1, np.int64)
    ops = 0
    v = 0
    while v < N:
        w = v
        while w < N and I[w] == I[v]:
            w += 1
        for t in range(v, w):
            bk = -np.inf
            ba = -1
            pos = rank[t]
            while pos > 0:
                ops += 1
                if _beats(key[pos], arg[pos], bk, ba, tol):
                    bk = key[pos]
                    ba = arg[pos]
                pos -= pos & -pos
            best = bk - xi * (I[t] + J[t])
            if ba >= 0 and best > -tol:
                dp[t] = 1.0 + best
                pred[t] = ba
            else:
                dp[t] = 1.0
        for t in range(v, w):
            kv = dp[t] + xi * (I[t] + J[t])
            pos = rank[t]
            while pos <= size:
                ops += 1
                if _beats(kv, t, key[pos], arg[pos], tol):
                    key[pos] = kv
                    arg[pos] = t
                pos += pos & -pos
        v = w
    return dp, pred, ops


def optimal_chain_fast(anchors: AnchorSet, xi: float) -> Chain:
    """O(N log N) chaining.

    ``dp[v] = 1 - xi*(i_v + j_v) + max(dp[u] + xi*(i_u + j_u))`` over
    predecessors with ``i_u < i_v`` and ``j_u <= j_v``; the inner max is a
    prefix-max over ``j`` ranks.
    """
    anchors = _sorted(anchors)
    if len(anchors) == 0:
        return empty_chain(anchors.k)
    uniq = np.unique(anchors.j)
    rank = np.searchsorted(uniq, anchors.j).astype(np.int64) + 1
    dp, pred, ops = _fenwick_chain(anchors.i.astype(np.int64), anchors.j.astype(np.int64),
                                   rank, uniq.size, float(xi), TIE_TOL)
    return _backtrace(anchors, dp, pred, anchors.k, int(ops))


def brute_force_optimal(anchors: AnchorSet, xi: float) -> Chain:
    """Exhaustive maximum over every subset of the anchors (N <= 20)."""
    anchors = _sorted(anchors)
    N = len(anchors)
    if N > BRUTE_FORCE_LIMIT:
        raise ParameterError(f"exhaustive chaining refuses N={N} > {BRUTE_FORCE_LIMIT}")
    if N == 0:
        return empty_chain(anchors.k)
    I, J = anchors.i, anchors.j
    # bit u of bad[v] set when u < v cannot precede v
    bad = np.zeros(N, np.int64)
    for v in range(N):
        for u in range(v):
            if not (I[u] < I[v] and J[u] <= J[v]):
                bad[v] |= 1 << u
    masks = np.arange(1, 1 << N, dtype=np.int64)
    ok = np.ones(masks.size, bool)
    size = np.zeros(masks.size, np.int64)
    for v in range(N):
        has = ((masks >> v) & 1).astype(bool)
        size += has
        ok &= ~(has & ((masks & bad[v]) != 0))
    lo = np.log2(masks & -masks).astype(np.int64)
    hi = np.floor(np.log2(masks)).astype(np.int64)
    score = size - xi * ((I[hi] - I[lo]) + (J[hi] - J[lo]))
    score[~ok] = -np.inf
    best = score.max()
    pick = int(np.flatnonzero(score >= best - TIE_TOL)[0])
    members = [v for v in range(N) if (int(masks[pick]) >> v) & 1]
    return Chain(I[members], J[members], float(score[pick]), anchors.k)
