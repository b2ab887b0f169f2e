"""Non-recoverable path points and chain recoverability.

Everything is expressed over path indices: ``U`` and ``Align(C) ∩ P_H`` are
boolean masks parallel to the homologous path arrays.  Both are unions of
contiguous index intervals, because points of a monotone path inside an
x-range, a y-range, or an axis-aligned box always form one interval.

The origin ``(p, 0)`` aligns no letter of S' and no anchor can reach it, so
the recoverability ratios are taken over the remaining path points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chaining import Chain
from .extension import gap_boxes
from .seqgen import HomologousPath


class DegenerateInstanceError(ValueError):
    """Recoverability is undefined because every path point is non-recoverable."""


@dataclass
class NonRecoverableSet:
    mask: np.ndarray
    r: np.ndarray
    l: np.ndarray

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def points(self, path: HomologousPath) -> list[tuple[int, int]]:
        return list(zip(path.x[self.mask].tolist(), path.y[self.mask].tolist()))


def _mark(total: int, starts, stops) -> np.ndarray:
    """Union of half-open index intervals as a boolean mask."""
    starts = np.asarray(starts, np.int64)
    stops = np.asarray(stops, np.int64)
    keep = stops > starts
    diff = np.zeros(total + 1, np.int64)
    np.add.at(diff, starts[keep], 1)
    np.add.at(diff, stops[keep], -1)
    return np.cumsum(diff[:-1]) > 0


def _run_lengths(path: HomologousPath, S, S_prime, direction: int) -> np.ndarray:
    """r (direction=+1) or l (direction=-1) for every path point.

    Only points whose first diagonal neighbour is off the path and carries a
    matching letter pair can have a non-zero length; those are extended one
    step at a time in bulk.
    """
    n, m = S.size, S_prime.size
    out = np.zeros(len(path), np.int64)
    idx = np.arange(len(path))
    t = 0
    while idx.size:
        t += 1
        xs = path.x[idx] + direction * t
        ys = path.y[idx] + direction * t
        ok = (xs >= 1) & (xs <= n) & (ys >= 1) & (ys <= m)
        idx, xs, ys = idx[ok], xs[ok], ys[ok]
        ok = S[xs - 1] == S_prime[ys - 1]
        idx, xs, ys = idx[ok], xs[ok], ys[ok]
        ok = ~path.contains(xs, ys)
        idx = idx[ok]
        out[idx] = t
    return out


def non_recoverable(path: HomologousPath, S, S_prime) -> NonRecoverableSet:
    S = np.asarray(S, np.uint8)
    S_prime = np.asarray(S_prime, np.uint8)
    r = _run_lengths(path, S, S_prime, +1)
    l = _run_lengths(path, S, S_prime, -1)
    total = len(path)
    starts, stops = [], []
    for lens, sign in ((r, +1), (l, -1)):
        hit = np.flatnonzero(lens > 0)
        x, y, t = path.x[hit], path.y[hit], lens[hit]
        if sign > 0:
            # i < x <= i + r  or  j < y <= j + r
            ranges = ((x + 1, x + t, path.x), (y + 1, y + t, path.y))
        else:
            # i - l < x <= i  or  j - l < y <= j
            ranges = ((x - t + 1, x, path.x), (y - t + 1, y, path.y))
        for lo, hi, coord in ranges:
            starts.append(np.searchsorted(coord, lo, "left"))
            stops.append(np.searchsorted(coord, hi, "right"))
    mask = _mark(total, np.concatenate(starts), np.concatenate(stops))
    return NonRecoverableSet(mask, r, l)


def non_recoverable_brute_force(path: HomologousPath, S, S_prime) -> set[tuple[int, int]]:
    """U straight from the set-builder definition; quadratic, for small inputs."""
    S = np.asarray(S).tolist()
    T = np.asarray(S_prime).tolist()
    n, m = len(S), len(T)
    pts = path.points
    on = set(pts)

    def length(i, j, d):
        # the predicate is prefix-closed, so the max t is the first failure minus one
        t = 0
        while True:
            x, y = i + d * (t + 1), j + d * (t + 1)
            if not (1 <= x <= n and 1 <= y <= m) or S[x - 1] != T[y - 1] or (x, y) in on:
                return t
            t += 1

    U = set()
    for i, j in pts:
        r = length(i, j, +1)
        l = length(i, j, -1)
        for x, y in pts:
            if i < x <= i + r or j < y <= j + r:
                U.add((x, y))
            if i - l < x <= i or j - l < y <= j:
                U.add((x, y))
    return U


class AlignSet:
    """Align(C): anchor diagonals plus every non-empty gap box, kept implicit."""

    def __init__(self, chain: Chain):
        self.chain = chain
        self.boxes = [b for b in gap_boxes(chain) if not b.empty]

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, np.int64)
        y = np.asarray(y, np.int64)
        hit = np.zeros(np.broadcast(x, y).shape, bool)
        k = self.chain.k
        for i, j in zip(self.chain.i.tolist(), self.chain.j.tolist()):
            d = x - i
            hit |= (d >= 0) & (d < k) & (y - j == d)
        for b in self.boxes:
            hit |= b.contains(x, y)
        return hit

    def path_mask(self, path: HomologousPath) -> np.ndarray:
        """Which path points lie in Align(C)."""
        total = len(path)
        if len(self.chain) == 0:
            return np.zeros(total, bool)
        k = self.chain.k
        t = np.arange(k)
        dx = (self.chain.i[:, None] + t).ravel()
        dy = (self.chain.j[:, None] + t).ravel()
        idx = path.index_of(dx, dy)
        idx = idx[idx >= 0]
        starts, stops = [idx], [idx + 1]
        for b in self.boxes:
            a, z = path.index_interval(b.x_lo, b.x_hi, "x")
            lo = a + np.searchsorted(path.y[a:z], b.y_lo, "left")
            hi = a + np.searchsorted(path.y[a:z], b.y_hi, "right")
            starts.append(np.array([lo]))
            stops.append(np.array([hi]))
        return _mark(total, np.concatenate(starts), np.concatenate(stops))

    def count_on_path(self, path: HomologousPath) -> int:
        return int(self.path_mask(path).sum())


def align_set(chain: Chain) -> AlignSet:
    return AlignSet(chain)


def _scored(path: HomologousPath) -> np.ndarray:
    keep = np.ones(len(path), bool)
    keep[0] = False
    return keep


def recoverability_generalized(chain: Chain, path: HomologousPath, U: NonRecoverableSet) -> float:
    return recoverability_report(chain, path, U).generalized


def recoverability_prequel(chain: Chain, path: HomologousPath) -> float:
    scored = _scored(path)
    return int((AlignSet(chain).path_mask(path) & scored).sum()) / int(scored.sum())


@dataclass
class RecoverabilityReport:
    """Ratios plus the counts behind them; ``path_size`` counts scored points."""

    generalized: float
    prequel: float
    path_size: int
    u_size: int
    recovered: int


def recoverability_report(chain: Chain, path: HomologousPath, U: NonRecoverableSet) -> RecoverabilityReport:
    scored = _scored(path)
    on = AlignSet(chain).path_mask(path) & scored
    keep = scored & ~U.mask
    denom = int(keep.sum())
    if denom == 0:
        raise DegenerateInstanceError("every homologous path point is non-recoverable")
    recovered = int((on & keep).sum())
    total = int(scored.sum())
    return RecoverabilityReport(recovered / denom, int(on.sum()) / total, total,
                                int((U.mask & scored).sum()), recovered)


def missed_ends_bound(chain: Chain, path: HomologousPath) -> float:
    """1 - [(i_1 - i_s) + (j_1 - j_s) + (i_e - i_u) + (j_e - j_u)] / |P_H|, the
    guaranteed recoverability when nothing between the chain ends is missed."""
    if len(chain) == 0:
        return 0.0
    missed = ((chain.i[0] - path.x[0]) + (chain.j[0] - path.y[0])
              + (path.x[-1] - chain.i[-1]) + (path.y[-1] - chain.j[-1]))
    return 1.0 - float(missed) / len(path)
