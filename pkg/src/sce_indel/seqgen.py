"""Random references, the indel+substitution channel, and the homologous path.

Coordinates follow a 1-based domain model: the letter at position ``x`` of a
sequence ``S`` lives at ``S[x - 1]`` of the backing numpy array.  Homologous
path points ``(x, y)`` count consumed letters, so the path for a generative
region starting after ``p`` prefix letters begins at ``(p, 0)``.

Random streams: every stochastic call takes a :class:`numpy.random.Generator`.
:func:`trial_rng` derives independent PCG64 streams from a master seed by
feeding ``[master_seed, *keys]`` to :class:`numpy.random.SeedSequence`, so a
trial's stream depends only on its keys and never on execution order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

STRICT_THETA_LIMIT = 0.159
STRICT_RHO_NUDGE = 1e-9


class ParameterError(ValueError):
    """Invalid parameters for a generator, channel, or index."""


def trial_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, keys)]))


@dataclass(frozen=True)
class MutationParams:
    theta_s: float
    theta_d: float
    theta_i: float
    rho_i: float
    gamma: float
    sigma: int = 4
    strict: bool = False

    def __post_init__(self):
        for name in ("theta_s", "theta_d", "theta_i"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ParameterError(f"{name}={v} outside [0, 1)")
        if self.theta_T >= 1.0:
            raise ParameterError(f"theta_T={self.theta_T} must be < 1")
        if self.strict and self.theta_T >= STRICT_THETA_LIMIT:
            raise ParameterError(f"strict mode requires theta_T < {STRICT_THETA_LIMIT}, got {self.theta_T}")
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma={self.gamma} outside (0, 1)")
        if not 0.0 <= self.rho_i < 1.0:
            raise ParameterError(f"rho_i={self.rho_i} outside [0, 1)")
        # experiments run with rho_i == gamma unless strict
        if self.rho_i > self.gamma or (self.strict and self.rho_i >= self.gamma):
            raise ParameterError(f"rho_i={self.rho_i} must be below gamma={self.gamma}")
        if int(self.sigma) < 2:
            raise ParameterError(f"sigma={self.sigma} must be >= 2")

    @property
    def theta_T(self) -> float:
        return self.theta_s + self.theta_d + self.theta_i

    @classmethod
    def from_total(cls, theta_s, theta_d, theta_i, gamma, sigma=4, strict=False):
        """Experiment convention: rho_i = gamma, nudged just below it in strict mode."""
        rho = gamma - STRICT_RHO_NUDGE if strict else gamma
        return cls(theta_s, theta_d, theta_i, rho, gamma, sigma, strict)


@dataclass
class EditScript:
    """Ground-truth edit history of the generative region ``S[p+1 : p+m']``.

    Per generative position ``j`` (0-based arrays of length ``m_prime``):
    ``ins_len[j]`` letters (stored consecutively in ``ins_letters``) are
    inserted to the left of ``S[p+j+1]``; ``deleted[j]`` drops the letter;
    ``sub_to[j] >= 0`` replaces it.  Substitutions on deleted positions are
    never recorded.
    """

    p: int
    m_prime: int
    ins_len: np.ndarray
    ins_letters: np.ndarray
    deleted: np.ndarray
    sub_to: np.ndarray
    sigma: int = 4

    def __post_init__(self):
        self.ins_len = np.asarray(self.ins_len, dtype=np.int64)
        self.ins_letters = np.asarray(self.ins_letters, dtype=np.uint8)
        self.deleted = np.asarray(self.deleted, dtype=bool)
        self.sub_to = np.asarray(self.sub_to, dtype=np.int16)
        for a in (self.ins_len, self.deleted, self.sub_to):
            if a.shape != (self.m_prime,):
                raise ParameterError("per-position arrays must have length m_prime")
        if int(self.ins_len.sum()) != self.ins_letters.size:
            raise ParameterError("ins_letters length disagrees with ins_len")
        if np.any(self.deleted & (self.sub_to >= 0)):
            raise ParameterError("deleted positions cannot carry a substitution")

    @classmethod
    def identity(cls, p: int, m_prime: int, sigma: int = 4) -> "EditScript":
        return cls(p, m_prime, np.zeros(m_prime, np.int64), np.zeros(0, np.uint8),
                   np.zeros(m_prime, bool), np.full(m_prime, -1, np.int16), sigma)

    @classmethod
    def from_events(cls, p: int, m_prime: int, *, insertions: Mapping[int, Iterable[int]] = (),
                    deletions: Iterable[int] = (), substitutions: Mapping[int, int] = (),
                    sigma: int = 4) -> "EditScript":
        """Build a script from absolute 1-based positions in ``S``."""
        insertions = dict(insertions)
        substitutions = dict(substitutions)
        ins_len = np.zeros(m_prime, np.int64)
        deleted = np.zeros(m_prime, bool)
        sub_to = np.full(m_prime, -1, np.int16)
        letters = []

        def slot(pos):
            j = pos - p - 1
            if not 0 <= j < m_prime:
                raise ParameterError(f"position {pos} outside generative region ({p}, {p + m_prime}]")
            return j

        for pos in sorted(insertions):
            seg = list(insertions[pos])
            ins_len[slot(pos)] = len(seg)
            letters.extend(seg)
        for pos in deletions:
            deleted[slot(pos)] = True
        for pos, letter in substitutions.items():
            sub_to[slot(pos)] = letter
        return cls(p, m_prime, ins_len, np.array(letters, np.uint8), deleted, sub_to, sigma)

    @property
    def ins_offsets(self) -> np.ndarray:
        off = np.zeros(self.m_prime + 1, np.int64)
        np.cumsum(self.ins_len, out=off[1:])
        return off

    def inserted_at(self, pos: int) -> np.ndarray:
        j = pos - self.p - 1
        off = self.ins_offsets
        return self.ins_letters[off[j]:off[j + 1]]

    @property
    def n_deletions(self) -> int:
        return int(self.deleted.sum())

    @property
    def total_inserted(self) -> int:
        return int(self.ins_len.sum())

    @property
    def query_length(self) -> int:
        return self.m_prime - self.n_deletions + self.total_inserted

    def validate_against(self, S: np.ndarray) -> None:
        region = S[self.p:self.p + self.m_prime]
        if region.size != self.m_prime:
            raise ParameterError("generative region runs past the end of S")
        has_sub = self.sub_to >= 0
        if np.any(self.sub_to[has_sub] == region[has_sub]):
            raise ParameterError("substitution to the original letter")

    def apply(self, S: np.ndarray) -> np.ndarray:
        """Replay the script on ``S[p+1 : p+m']`` and return ``S'``."""
        S = np.asarray(S, dtype=np.uint8)
        region = S[self.p:self.p + self.m_prime]
        if region.size != self.m_prime:
            raise ParameterError("generative region runs past the end of S")
        kept = np.where(self.sub_to >= 0, self.sub_to, region).astype(np.uint8)
        block = self.ins_len + (~self.deleted)
        start = np.zeros(self.m_prime, np.int64)
        np.cumsum(block[:-1], out=start[1:])
        out = np.empty(int(block.sum()), np.uint8)
        if self.ins_letters.size:
            ins_start = self.ins_offsets[:-1]
            rel = np.arange(self.ins_letters.size) - np.repeat(ins_start, self.ins_len)
            out[np.repeat(start, self.ins_len) + rel] = self.ins_letters
        keep = ~self.deleted
        out[(start + self.ins_len)[keep]] = kept[keep]
        return out


@dataclass
class SequencePair:
    S: np.ndarray
    S_prime: np.ndarray
    script: EditScript

    @property
    def n(self) -> int:
        return int(self.S.size)

    @property
    def m(self) -> int:
        return int(self.S_prime.size)


@dataclass
class HomologousPath:
    """Monotone lattice path; ``x`` and ``y`` are parallel int64 arrays.

    Points sharing an ``x`` form one contiguous run of the path with
    consecutive ``y`` values, which gives O(1) membership through the
    per-column tables built in ``__post_init__``.
    """

    x: np.ndarray
    y: np.ndarray
    _x0: int = field(init=False, repr=False)
    _first: np.ndarray = field(init=False, repr=False)
    _last: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self._x0 = int(self.x[0])
        cols = np.arange(self._x0, int(self.x[-1]) + 1)
        self._first = np.searchsorted(self.x, cols, side="left")
        self._last = np.searchsorted(self.x, cols, side="right") - 1

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def points(self) -> list[tuple[int, int]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def x_max(self) -> int:
        return int(self.x[-1])

    def column_range(self, xs):
        """(ylo, yhi) per queried column; columns off the path get (1, 0)."""
        xs = np.asarray(xs, dtype=np.int64)
        c = xs - self._x0
        ok = (c >= 0) & (c < self._first.size)
        cc = np.where(ok, c, 0)
        ylo = np.where(ok, self.y[self._first[cc]], 1)
        yhi = np.where(ok, self.y[self._last[cc]], 0)
        return ylo, yhi

    def contains(self, xs, ys):
        ylo, yhi = self.column_range(xs)
        ys = np.asarray(ys, dtype=np.int64)
        return (ylo <= ys) & (ys <= yhi)

    def index_of(self, xs, ys):
        """Path index of each point, or -1 when the point is off the path."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        on = self.contains(xs, ys)
        c = np.where(on, xs - self._x0, 0)
        return np.where(on, self._first[c] + (ys - self.y[self._first[c]]), -1)

    def index_interval(self, lo, hi, axis: str = "x"):
        """Path index interval [a, b) of points with lo <= coord <= hi."""
        coord = self.x if axis == "x" else self.y
        a = np.searchsorted(coord, lo, side="left")
        b = np.searchsorted(coord, hi, side="right")
        return a, b


@dataclass
class CorrespondenceMap:
    """``forward[x]`` for 1-based ``x`` in S, ``inverse[y]`` for ``y`` in S'; 0 means null."""

    forward: np.ndarray
    inverse: np.ndarray

    def f(self, x: int) -> Optional[int]:
        v = int(self.forward[x]) if 0 < x < self.forward.size else 0
        return v or None

    def f_inv(self, y: int) -> Optional[int]:
        v = int(self.inverse[y]) if 0 < y < self.inverse.size else 0
        return v or None

    def preimage(self, lo: int, hi: int) -> np.ndarray:
        """Positions of S mapped into S'[lo..hi]."""
        lo = max(lo, 1)
        hi = min(hi, self.inverse.size - 1)
        if hi < lo:
            return np.zeros(0, np.int64)
        v = self.inverse[lo:hi + 1]
        return v[v > 0].astype(np.int64)


def generate_reference(n: int, sigma: int, rng: np.random.Generator) -> np.ndarray:
    if int(n) < 1 or int(sigma) < 2:
        raise ParameterError(f"need n >= 1 and sigma >= 2, got n={n}, sigma={sigma}")
    return rng.integers(0, sigma, size=int(n), dtype=np.uint8)


def draw_script(p: int, m_prime: int, region: np.ndarray, params: MutationParams,
                rng: np.random.Generator) -> EditScript:
    sigma = int(params.sigma)
    u = rng.random((3, m_prime))
    ins = u[0] < params.theta_i
    deleted = u[1] < params.theta_d
    sub = (u[2] < params.theta_s) & ~deleted
    sub_to = np.full(m_prime, -1, np.int16)
    shift = rng.integers(1, sigma, size=int(sub.sum()))
    sub_to[sub] = (region[sub].astype(np.int64) + shift) % sigma
    ins_len = np.zeros(m_prime, np.int64)
    ins_len[ins] = rng.geometric(1.0 - params.rho_i, size=int(ins.sum()))
    letters = rng.integers(0, sigma, size=int(ins_len.sum()), dtype=np.uint8)
    return EditScript(p, m_prime, ins_len, letters, deleted, sub_to, sigma)


def mutate(S: np.ndarray, p: int, m_prime: int, params: MutationParams,
           rng: np.random.Generator) -> SequencePair:
    S = np.asarray(S, dtype=np.uint8)
    if p < 0 or m_prime < 1 or p + m_prime > S.size:
        raise ParameterError(f"generative region ({p}, {p + m_prime}] outside S of length {S.size}")
    script = draw_script(p, m_prime, S[p:p + m_prime], params, rng)
    return SequencePair(S, script.apply(S), script)


def build_homologous_path(script: EditScript) -> HomologousPath:
    ins_len = script.ins_len
    steps = ins_len + 1
    final = np.cumsum(steps) - 1
    total = int(steps.sum())
    dx = np.zeros(total, np.int64)
    dx[final] = 1
    dy = np.ones(total, np.int64)
    dy[final[script.deleted]] = 0
    x = np.empty(total + 1, np.int64)
    y = np.empty(total + 1, np.int64)
    x[0], y[0] = script.p, 0
    np.cumsum(dx, out=x[1:])
    x[1:] += script.p
    np.cumsum(dy, out=y[1:])
    return HomologousPath(x, y)


def correspondence(path: HomologousPath, script: EditScript, n: Optional[int] = None) -> CorrespondenceMap:
    """Position map between S and S'.

    A surviving letter ``x`` corresponds to the point where the path enters
    column ``x`` with a diagonal step, i.e. the lowest ``y`` in that column.
    Letters inserted to the left of ``x + 1`` share column ``x`` above it.
    """
    n = script.p + script.m_prime if n is None else n
    m = int(path.y[-1])
    forward = np.zeros(n + 1, np.int64)
    inverse = np.zeros(m + 1, np.int64)
    xs = np.arange(script.p + 1, script.p + script.m_prime + 1)
    live = ~script.deleted
    ylo, _ = path.column_range(xs[live])
    forward[xs[live]] = ylo
    inverse[ylo] = xs[live]
    return CorrespondenceMap(forward, inverse)


def sample_simplex_rates(theta_T: float, rng: np.random.Generator) -> tuple[float, float, float]:
    """(theta_i, theta_d, theta_s) uniform on the simplex scaled to ``theta_T``."""
    w = rng.dirichlet(np.ones(3)) * theta_T
    w[2] = theta_T - w[0] - w[1]
    return float(w[0]), float(w[1]), float(max(w[2], 0.0))
