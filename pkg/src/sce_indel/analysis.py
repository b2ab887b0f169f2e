"""Model constants, high-probability event checkers, and log-log regression."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .seeding import AnchorSet
from .seqgen import STRICT_THETA_LIMIT, CorrespondenceMap, EditScript, ParameterError

CALPHA_FACTOR = 3.15


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ConstantsBundle:
    sigma: int
    theta_T: float
    gamma: float
    n: int
    delta: float
    theta_d: float
    alpha: float
    C: float
    k: int
    beta: float
    t0: float
    xi: float
    g_n: float
    expansion_threshold: float
    contraction_block: int
    contraction_threshold: float
    c0: float
    strict_warning: bool

    @property
    def c_alpha(self) -> float:
        return self.C * self.alpha

    @property
    def c_alpha_bound_ok(self) -> bool:
        """Cα < 3.15·θ_T, the stated upper bound for θ_T below the strict limit."""
        return self.c_alpha < CALPHA_FACTOR * self.theta_T


def alpha_of(theta_T: float, sigma: int) -> float:
    return -math.log(1.0 - theta_T) / math.log(sigma)


def c_of(theta_T: float, sigma: int, delta: float = 0.0) -> float:
    a = alpha_of(theta_T, sigma)
    if delta and a == 0.0:
        raise ParameterError("delta > 0 needs theta_T > 0")
    return 3.0 / (1.0 - 2.0 * a) + (delta / a if delta else 0.0)


def n_for_k(k: int, theta_T: float, sigma: int = 4, delta: float = 0.0) -> int:
    """Invert k = C log_sigma(n) and round to the nearest integer."""
    return int(round(sigma ** (k / c_of(theta_T, sigma, delta))))


def derive_constants(sigma: int, theta_T: float, gamma: float, n: int, delta: float = 0.0,
                     theta_d: float = 0.0, k: int | None = None) -> ConstantsBundle:
    """All derived constants; ``k`` defaults to round(C log_sigma n)."""
    if not 0.0 <= theta_T < 1.0 or sigma < 2 or n < 2:
        raise ParameterError(f"need theta_T in [0,1), sigma >= 2, n >= 2; got {theta_T}, {sigma}, {n}")
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma={gamma} outside (0, 1)")
    alpha = alpha_of(theta_T, sigma)
    if 2 * alpha >= 1:
        raise ParameterError(f"alpha={alpha} too large: C is undefined for 2*alpha >= 1")
    C = c_of(theta_T, sigma, delta)
    if k is None:
        k = int(round(C * math.log(n) / math.log(sigma)))
    beta = 1.0 / math.log(sigma)
    t0 = 0.5 * math.log(9.0 / (1.0 + 8.0 * gamma))
    g_n = 50.0 * k / (8.0 * (1.0 - theta_T) ** k) * math.log(n)
    block = math.ceil(21.0 * k / beta)
    return ConstantsBundle(
        sigma=sigma, theta_T=theta_T, gamma=gamma, n=n, delta=delta, theta_d=theta_d,
        alpha=alpha, C=C, k=k, beta=beta, t0=t0, xi=1.0 / n, g_n=g_n,
        expansion_threshold=(2.0 / beta + 1.0) * k / t0,
        contraction_block=block,
        contraction_threshold=(1.0 - theta_d) * block / 2.0,
        c0=max(t0, 21.0 / beta),
        strict_warning=theta_T >= STRICT_THETA_LIMIT,
    )


def _window_sums(values: np.ndarray, width: int) -> np.ndarray:
    c = np.concatenate(([0], np.cumsum(values, dtype=np.int64)))
    return c[width:] - c[:-width]


def check_EC(script: EditScript, constants: ConstantsBundle) -> tuple[bool, bool]:
    """(bounded expansion, bounded contraction) over sliding windows.

    Regions shorter than a window have no window to violate the bound.
    """
    k, block = constants.k, constants.contraction_block
    expansion_ok = True
    if script.m_prime >= k:
        expansion_ok = bool(np.all(_window_sums(script.ins_len, k) <= constants.expansion_threshold))
    contraction_ok = True
    if script.m_prime >= block:
        kept = _window_sums((~script.deleted).astype(np.int64), block)
        contraction_ok = bool(np.all(kept > constants.contraction_threshold))
    return expansion_ok, contraction_ok


def max_homologous_gap(anchors: AnchorSet, codes: np.ndarray, p: int, m_prime: int) -> int:
    """Longest run of positions in [p+1, p+m'-k+1] where no homologous anchor starts."""
    lo, hi = p + 1, p + m_prime - anchors.k + 1
    if hi < lo:
        return 0
    starts = np.unique(anchors.i[(codes == 0) & (anchors.i >= lo) & (anchors.i <= hi)])
    edges = np.concatenate(([lo - 1], starts, [hi + 1]))
    return int(np.max(np.diff(edges)) - 1)


def check_F2(anchors: AnchorSet, codes: np.ndarray, script: EditScript, g_n: float) -> tuple[bool, int]:
    gap = max_homologous_gap(anchors, codes, script.p, script.m_prime)
    return gap <= g_n, gap


def check_F1(codes: np.ndarray) -> tuple[bool, int]:
    spurious = int(np.sum(codes == 2))
    return spurious == 0, spurious


@dataclass
class DiagnosticReport:
    ec_expansion_ok: bool
    ec_contraction_ok: bool
    f1_no_spurious: bool
    f2_max_gap_ok: bool
    max_homologous_gap: int
    spurious_count: int
    g_n: float

    @property
    def ec_ok(self) -> bool:
        return self.ec_expansion_ok and self.ec_contraction_ok

    @property
    def all_ok(self) -> bool:
        return self.ec_ok and self.f1_no_spurious and self.f2_max_gap_ok


def diagnose(script: EditScript, anchors: AnchorSet, codes: np.ndarray,
             constants: ConstantsBundle) -> DiagnosticReport:
    exp_ok, con_ok = check_EC(script, constants)
    f1, spurious = check_F1(codes)
    f2, gap = check_F2(anchors, codes, script, constants.g_n)
    return DiagnosticReport(exp_ok, con_ok, f1, f2, gap, spurious, constants.g_n)


def _disjoint_from_preimage(lo: int, k: int, f: CorrespondenceMap, target_lo: int) -> bool:
    pre = f.preimage(target_lo, target_lo + k - 1)
    return not np.any((pre >= lo) & (pre <= lo + k - 1))


def check_anchor_independence(a, b, f: CorrespondenceMap) -> bool:
    """Sufficient condition for two anchors' match events to be independent."""
    k = a.k
    i, j, h, l = a.i, a.j, b.i, b.j
    apart = abs(i - h) >= k or abs(j - l) >= k
    if not apart:
        return False
    return _disjoint_from_preimage(i, k, f, l) or _disjoint_from_preimage(h, k, f, j)


def anchor_match_vars(anchors, k: int | None = None) -> list[tuple[int, int]]:
    """The k letter-pair match variables of each anchor."""
    out = []
    for a in anchors:
        kk = a.k if k is None else k
        out.extend((a.i + t, a.j + t) for t in range(kk))
    return out


def match_graph_acyclic(match_vars, f: CorrespondenceMap) -> bool:
    """Cycle test on the bipartite graph of S and S' positions.

    Edges are the conditioning pairs plus the correspondence edges
    ``(x, f(x))`` at touched positions.  A conditioning pair equal to a
    correspondence edge is the same dependency and is kept once.
    """
    edges = {(int(x), int(y)) for x, y in match_vars}
    xs = {x for x, _ in edges}
    ys = {y for _, y in edges}
    for x in xs:
        fy = f.f(x)
        if fy is not None:
            edges.add((x, fy))
    for y in ys:
        fx = f.f_inv(y)
        if fx is not None:
            edges.add((fx, y))
    parent: dict = {}

    def find(u):
        root = u
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(u, u) != root:
            parent[u], u = root, parent[u]
        return root

    for x, y in sorted(edges):
        ru, rv = find(("x", x)), find(("y", y))
        if ru == rv:
            return False
        parent[ru] = rv
    return True


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    slope_ci95: tuple[float, float]
    r_squared: float
    n_points: int
    slope_se: float = 0.0

    def ci_contains(self, value: float) -> bool:
        lo, hi = self.slope_ci95
        return lo - 1e-12 <= value <= hi + 1e-12


def ols(x, y) -> RegressionFit:
    """Least squares y = a + b x with the two-sided 95% t-interval on b."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 3:
        raise FitError(f"need at least 3 points, got {x.size}")
    if np.ptp(x) == 0:
        raise FitError("x values have no spread")
    res = stats.linregress(x, y)
    se = float(res.stderr)
    half = float(stats.t.ppf(0.975, x.size - 2)) * se
    r2 = float(res.rvalue ** 2) if np.isfinite(res.rvalue) else 1.0
    return RegressionFit(float(res.slope), float(res.intercept),
                         (float(res.slope) - half, float(res.slope) + half), r2, int(x.size), se)


def ols_loglog(points) -> RegressionFit:
    pts = np.asarray(list(points), float).reshape(-1, 2)
    if np.any(pts <= 0):
        raise FitError("log-log fit needs strictly positive coordinates")
    return ols(np.log(pts[:, 0]), np.log(pts[:, 1]))


@dataclass(frozen=True)
class FrequencyCheck:
    hits: int
    trials: int
    bound: float

    @property
    def frequency(self) -> float:
        return self.hits / self.trials if self.trials else 0.0

    @property
    def standard_error(self) -> float:
        p = max(self.frequency, min(self.bound, 1.0))
        return math.sqrt(p * (1.0 - p) / self.trials) if self.trials else 0.0

    @property
    def ok(self) -> bool:
        """One-sided: observed frequency at most bound + 3 SE."""
        return self.frequency <= self.bound + 3.0 * self.standard_error
