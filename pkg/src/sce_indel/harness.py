"""Trial orchestration, sweeps, aggregation and fits.

Seeding rule: trial ``t`` of cell ``c`` uses the integer seed
``SeedSequence([master_seed, c, t]).generate_state(1, uint64)[0]`` and a
fresh PCG64 generator built from it, so any single trial can be replayed
from its recorded seed alone.

``trials.csv`` and ``cells.csv`` hold only seed-determined values and are
byte-identical across runs; wall-clock measurements go to ``timings.csv``
and ``cell_timings.csv``.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (FitError, RegressionFit, alpha_of, c_of, derive_constants, diagnose,
                       ols_loglog)
from .chaining import Chain, optimal_chain_fast
from .extension import count_extension_cells, full_alignment, warm_up
from .formats import fmt, write_csv, write_dat
from .recoverability import DegenerateInstanceError, non_recoverable, recoverability_report
from .seeding import AnchorSet, class_codes, find_anchors, index_reference
from .seqgen import (CorrespondenceMap, EditScript, HomologousPath, MutationParams, ParameterError,
                     build_homologous_path, correspondence, generate_reference, mutate,
                     sample_simplex_rates)

MODES = ("recoverability", "runtime")
MAX_DROP_FRACTION = 0.2
REFERENCE_SLOPE = -0.5
REFERENCE_RUNTIME_SCALE = 3.87e-8


def trial_seed(master_seed: int, cell: int, trial: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(cell), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Cell:
    index: int
    theta_T: float
    gamma: float
    k: int
    n: int
    m_prime: int
    sigma: int = 4
    delta: float = 0.0
    strict: bool = False
    mode: str = "recoverability"
    include_ends: bool = False

    @property
    def C(self) -> float:
        return c_of(self.theta_T, self.sigma, self.delta)

    @property
    def c_alpha(self) -> float:
        return self.C * alpha_of(self.theta_T, self.sigma)


def make_cell(index: int, theta_T: float, gamma: float, k: int, sigma: int = 4, delta: float = 0.0,
              strict: bool = False, mode: str = "recoverability", include_ends: bool = False) -> Cell:
    """n = round(sigma^(k/C)) and m' = round(n^((2Cα+1)/2)), capped at n."""
    C = c_of(theta_T, sigma, delta)
    c_alpha = C * alpha_of(theta_T, sigma)
    n = int(round(sigma ** (k / C)))
    m_prime = min(int(round(n ** ((2.0 * c_alpha + 1.0) / 2.0))), n)
    if n < k or m_prime < 1:
        raise ParameterError(f"k={k} gives n={n}, m'={m_prime}: too small")
    return Cell(index, theta_T, gamma, k, n, m_prime, sigma, delta, strict, mode, include_ends)


@dataclass
class SweepConfig:
    """Sweep grid and knobs.  ``epsilon`` and ``delta`` are the asymptotic slack
    terms; ``delta`` enters C, ``epsilon`` is recorded but has no numeric role."""

    theta_T_list: tuple = (0.05, 0.10, 0.159)
    gamma_list: tuple = (0.5,)
    k_min: int = 20
    k_max: int = 36
    k_step: int = 2
    iterations: int = 100
    sigma: int = 4
    master_seed: int = 0
    delta: float = 0.0
    epsilon: float = 0.0
    mode: str = "recoverability"
    strict: bool = False
    include_ends: Optional[bool] = None
    workers: int = 1

    def __post_init__(self):
        self.theta_T_list = tuple(float(v) for v in self.theta_T_list)
        self.gamma_list = tuple(float(v) for v in self.gamma_list)
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k_step < 1 or self.k_min < 1 or self.k_max < self.k_min:
            raise ParameterError(f"bad k range {self.k_min}..{self.k_max} step {self.k_step}")
        if self.iterations < 1:
            raise ParameterError("iterations must be >= 1")
        if not self.theta_T_list or not self.gamma_list:
            raise ParameterError("theta_T_list and gamma_list must be non-empty")
        for t in self.theta_T_list:
            MutationParams.from_total(t, 0.0, 0.0, self.gamma_list[0], self.sigma, self.strict)
        for g in self.gamma_list:
            if not 0.0 < g < 1.0:
                raise ParameterError(f"gamma={g} outside (0, 1)")

    @property
    def k_values(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1, self.k_step))

    @property
    def ends(self) -> bool:
        return self.mode == "runtime" if self.include_ends is None else bool(self.include_ends)

    def cells(self) -> list[Cell]:
        out = []
        for theta in self.theta_T_list:
            for gamma in self.gamma_list:
                for k in self.k_values:
                    out.append(make_cell(len(out), theta, gamma, k, self.sigma, self.delta,
                                         self.strict, self.mode, self.ends))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_T_list"] = list(self.theta_T_list)
        d["gamma_list"] = list(self.gamma_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, val in d.items():
            if key in ("theta_T_list", "gamma_list"):
                kw[key] = _floats(val) if isinstance(val, str) else tuple(val)
            elif key in ("k_min", "k_max", "k_step", "iterations", "sigma", "master_seed", "workers"):
                kw[key] = int(val)
            elif key in ("delta", "epsilon"):
                kw[key] = float(val)
            elif key == "strict":
                kw[key] = _bool(val)
            elif key == "include_ends":
                kw[key] = None if val in (None, "", "auto") else _bool(val)
            else:
                kw[key] = val
        return cls(**kw)

    @classmethod
    def from_text(cls, text: str) -> "SweepConfig":
        """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma-separated."""
        d = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line without '=': {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            d[key] = val
        return cls.from_dict(d)

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        text = Path(path).read_text()
        if str(path).endswith(".json"):
            data = json.loads(text)
            return cls.from_dict(data.get("config", data))
        return cls.from_text(text)


TRIAL_FIELDS = [
    "cell", "trial", "seed", "theta_T", "gamma", "k", "n", "m_prime", "m", "p",
    "theta_i", "theta_d", "theta_s", "N_H", "N_C", "N_S", "chain_len", "chain_score",
    "R_gen", "R_prequel", "U_size", "PH_size", "ec_exp", "ec_con", "f1", "f2", "max_gap", "g_n",
    "ext_cells", "chain_ops", "dropped", "reason",
]
TIMING_FIELDS = ["cell", "trial", "t_seed", "t_chain", "t_ext", "t_chain_ext"]


@dataclass
class TrialRecord:
    cell: int
    trial: int
    seed: int
    theta_T: float
    gamma: float
    k: int
    n: int
    m_prime: int
    m: int = 0
    p: int = 0
    theta_i: float = 0.0
    theta_d: float = 0.0
    theta_s: float = 0.0
    N_H: int = 0
    N_C: int = 0
    N_S: int = 0
    chain_len: int = 0
    chain_score: float = 0.0
    R_gen: float = math.nan
    R_prequel: float = math.nan
    U_size: int = 0
    PH_size: int = 0
    ec_exp: bool = True
    ec_con: bool = True
    f1: bool = True
    f2: bool = True
    max_gap: int = 0
    g_n: float = 0.0
    ext_cells: int = 0
    chain_ops: int = 0
    dropped: bool = False
    reason: str = ""
    timings: dict = field(default_factory=dict, compare=False)

    def row(self) -> list:
        return [getattr(self, name) for name in TRIAL_FIELDS]

    def timing_row(self) -> list:
        t = self.timings
        return [self.cell, self.trial, t.get("seed", 0.0), t.get("chain", 0.0), t.get("extension", 0.0),
                t.get("chain", 0.0) + t.get("extension", 0.0)]

    @property
    def chain_ext_time(self) -> float:
        return self.timings.get("chain", 0.0) + self.timings.get("extension", 0.0)


@dataclass
class PairAnalysis:
    """Everything computed for one (S, S', script) instance."""

    S: np.ndarray
    S_prime: np.ndarray
    script: EditScript
    path: HomologousPath
    f: CorrespondenceMap
    anchors: AnchorSet
    codes: np.ndarray
    chain: Chain
    timings: dict


def analyze_pair(S, S_prime, script: EditScript, k: int, xi: float) -> PairAnalysis:
    """Seed, chain and classify; the reference index is built outside the timers."""
    index = index_reference(S, k, script.sigma)
    t0 = time.perf_counter()
    anchors = find_anchors(index, S_prime)
    t1 = time.perf_counter()
    chain = optimal_chain_fast(anchors, xi)
    t2 = time.perf_counter()
    path = build_homologous_path(script)
    codes = class_codes(anchors, path)
    f = correspondence(path, script, S.size)
    return PairAnalysis(S, S_prime, script, path, f, anchors, codes, chain,
                        {"seed": t1 - t0, "chain": t2 - t1})


def run_trial(cell: Cell, seed: int, trial: int = 0) -> TrialRecord:
    rng = np.random.default_rng(seed)
    rec = TrialRecord(cell.index, trial, seed, cell.theta_T, cell.gamma, cell.k, cell.n, cell.m_prime)
    theta_i, theta_d, theta_s = sample_simplex_rates(cell.theta_T, rng)
    rec.theta_i, rec.theta_d, rec.theta_s = theta_i, theta_d, theta_s
    params = MutationParams.from_total(theta_s, theta_d, theta_i, cell.gamma, cell.sigma, cell.strict)
    S = generate_reference(cell.n, cell.sigma, rng)
    p = int(rng.integers(0, cell.n - cell.m_prime + 1))
    pair = mutate(S, p, cell.m_prime, params, rng)
    rec.m, rec.p = pair.m, p
    if pair.m < cell.k:
        rec.dropped, rec.reason = True, "m<k"
        return rec
    a = analyze_pair(S, pair.S_prime, pair.script, cell.k, 1.0 / cell.n)
    rec.timings = dict(a.timings)
    counts = np.bincount(a.codes, minlength=3)
    rec.N_H, rec.N_C, rec.N_S = (int(c) for c in counts)
    rec.chain_len, rec.chain_score, rec.chain_ops = len(a.chain), a.chain.score, a.chain.ops
    rec.PH_size = len(a.path)
    U = non_recoverable(a.path, S, pair.S_prime)
    rec.U_size = U.size
    try:
        rep = recoverability_report(a.chain, a.path, U)
        rec.R_gen, rec.R_prequel = rep.generalized, rep.prequel
    except DegenerateInstanceError:
        rec.dropped, rec.reason = True, "empty P_H minus U"
    rec.ext_cells = count_extension_cells(a.chain)
    if cell.mode == "runtime":
        _, acct = full_alignment(S, pair.S_prime, a.chain, cell.include_ends, p, cell.m_prime)
        rec.ext_cells = acct.ext_cells
        rec.timings["extension"] = acct.wall_times["extension"]
    consts = derive_constants(cell.sigma, cell.theta_T, cell.gamma, cell.n, cell.delta, theta_d, k=cell.k)
    diag = diagnose(pair.script, a.anchors, a.codes, consts)
    rec.ec_exp, rec.ec_con = diag.ec_expansion_ok, diag.ec_contraction_ok
    rec.f1, rec.f2 = diag.f1_no_spurious, diag.f2_max_gap_ok
    rec.max_gap, rec.g_n = diag.max_homologous_gap, diag.g_n
    return rec


def _run_indexed(job):
    cell, seed, trial = job
    return run_trial(cell, seed, trial)


@dataclass
class SweepResult:
    config: SweepConfig
    cells: list[Cell]
    records: list[TrialRecord]

    def by_cell(self) -> dict[int, list[TrialRecord]]:
        out: dict[int, list[TrialRecord]] = {c.index: [] for c in self.cells}
        for r in self.records:
            out[r.cell].append(r)
        return out


def sweep(config: SweepConfig, progress=None) -> SweepResult:
    cells = config.cells()
    jobs = [(c, trial_seed(config.master_seed, c.index, t), t)
            for c in cells for t in range(config.iterations)]
    warm_up()
    if config.workers > 1 and config.mode != "runtime":
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_run_indexed, jobs, chunksize=4))
    else:
        records = []
        for job in jobs:
            records.append(_run_indexed(job))
            if progress:
                progress(len(records), len(jobs))
    records.sort(key=lambda r: (r.cell, r.trial))
    return SweepResult(config, cells, records)


def sweep_recoverability(config: SweepConfig, progress=None) -> SweepResult:
    if config.mode != "recoverability":
        config = replace(config, mode="recoverability")
    return sweep(config, progress)


def sweep_runtime(config: SweepConfig, progress=None) -> SweepResult:
    if config.mode != "runtime":
        config = replace(config, mode="runtime")
    return sweep(config, progress)


CELL_FIELDS = ["cell", "theta_T", "gamma", "k", "n", "m_prime", "C", "c_alpha", "trials", "dropped",
               "valid", "mean_m", "mean_R_gen", "mean_R_prequel", "mean_U_size", "mean_PH_size",
               "mean_ext_cells", "mean_chain_ops", "predicted_f"]
CELL_TIMING_FIELDS = ["cell", "k", "mean_t_chain", "mean_t_ext", "mean_t_chain_ext", "predicted_f"]


def predicted_runtime(m: float, n: int, c_alpha: float) -> float:
    """m · n^(Cα) · ln n."""
    return m * n ** c_alpha * math.log(n)


@dataclass
class CellSummary:
    cell: Cell
    trials: int
    dropped: int
    mean_m: float
    mean_R_gen: float
    mean_R_prequel: float
    mean_U_size: float
    mean_PH_size: float
    mean_ext_cells: float
    mean_chain_ops: float
    mean_t_chain: float
    mean_t_ext: float

    @property
    def valid(self) -> bool:
        kept = self.trials - self.dropped
        return kept > 0 and self.dropped <= MAX_DROP_FRACTION * self.trials

    @property
    def mean_t_chain_ext(self) -> float:
        return self.mean_t_chain + self.mean_t_ext

    @property
    def predicted_f(self) -> float:
        return predicted_runtime(self.mean_m, self.cell.n, self.cell.c_alpha)

    def row(self) -> list:
        c = self.cell
        return [c.index, c.theta_T, c.gamma, c.k, c.n, c.m_prime, c.C, c.c_alpha, self.trials,
                self.dropped, self.valid, self.mean_m, self.mean_R_gen, self.mean_R_prequel,
                self.mean_U_size, self.mean_PH_size, self.mean_ext_cells, self.mean_chain_ops,
                self.predicted_f]

    def timing_row(self) -> list:
        return [self.cell.index, self.cell.k, self.mean_t_chain, self.mean_t_ext,
                self.mean_t_chain_ext, self.predicted_f]


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else math.nan


def summarize(result: SweepResult) -> list[CellSummary]:
    out = []
    groups = result.by_cell()
    for cell in result.cells:
        recs = groups[cell.index]
        kept = [r for r in recs if not r.dropped]
        out.append(CellSummary(
            cell, len(recs), len(recs) - len(kept),
            _mean([r.m for r in kept]), _mean([r.R_gen for r in kept]),
            _mean([r.R_prequel for r in kept]), _mean([r.U_size for r in kept]),
            _mean([r.PH_size for r in kept]), _mean([r.ext_cells for r in kept]),
            _mean([r.chain_ops for r in kept]),
            _mean([r.timings.get("chain", 0.0) for r in kept]),
            _mean([r.timings.get("extension", 0.0) for r in kept])))
    return out


@dataclass
class SeriesFit:
    theta_T: float
    gamma: float
    kind: str
    fit: Optional[RegressionFit]
    xs: list
    ys: list
    warning: str = ""


@dataclass
class Report:
    mode: str
    fits: list[SeriesFit]
    warnings: list[str]
    runtime_scale: float = math.nan
    proxy_correlation: float = math.nan
    summaries: list[CellSummary] = field(default_factory=list)


def _series(summaries: list[CellSummary]) -> dict[tuple[float, float], list[CellSummary]]:
    out: dict[tuple[float, float], list[CellSummary]] = {}
    for s in summaries:
        out.setdefault((s.cell.theta_T, s.cell.gamma), []).append(s)
    for v in out.values():
        v.sort(key=lambda s: s.cell.k)
    return out


def fit_and_report(summaries: list[CellSummary], mode: str = "recoverability") -> Report:
    """Per-(θ_T, γ) series fits; series with fewer than 3 usable points get a warning."""
    fits, warnings = [], []
    for (theta, gamma), group in sorted(_series(summaries).items()):
        usable = [s for s in group if s.valid]
        if mode == "recoverability":
            pts = [(s.mean_m, 1.0 - s.mean_R_gen) for s in usable if s.mean_R_gen < 1.0]
            kind = "log(1-R_gen) ~ log(mean m)"
        else:
            pts = [(s.predicted_f, s.mean_t_chain_ext) for s in usable if s.mean_t_chain_ext > 0]
            kind = "log(time) ~ log(m n^Ca ln n)"
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        try:
            fit = ols_loglog(pts)
            sf = SeriesFit(theta, gamma, kind, fit, xs, ys)
        except FitError as exc:
            msg = f"theta_T={theta} gamma={gamma}: no fit ({exc})"
            warnings.append(msg)
            sf = SeriesFit(theta, gamma, kind, None, xs, ys, str(exc))
        fits.append(sf)
    rep = Report(mode, fits, warnings, summaries=list(summaries))
    if mode == "runtime":
        valid = [s for s in summaries if s.valid and s.mean_t_chain_ext > 0]
        if valid:
            first = min(valid, key=lambda s: s.cell.k)
            rep.runtime_scale = first.mean_t_chain_ext / first.predicted_f
        if len(valid) >= 3:
            proxy = [s.mean_ext_cells + s.mean_chain_ops for s in valid]
            rep.proxy_correlation = float(np.corrcoef(proxy, [s.mean_t_chain_ext for s in valid])[0, 1])
    return rep


FIT_FIELDS = ["theta_T", "gamma", "kind", "slope", "ci_lo", "ci_hi", "intercept", "r_squared",
              "n_points", "reference_slope", "warning"]


def fit_rows(report: Report) -> list[list]:
    rows = []
    for sf in report.fits:
        f = sf.fit
        if f is None:
            rows.append([sf.theta_T, sf.gamma, sf.kind, "", "", "", "", "", len(sf.xs),
                         REFERENCE_SLOPE, sf.warning])
        else:
            rows.append([sf.theta_T, sf.gamma, sf.kind, f.slope, f.slope_ci95[0], f.slope_ci95[1],
                         f.intercept, f.r_squared, f.n_points, REFERENCE_SLOPE, sf.warning])
    return rows


@dataclass
class RunManifest:
    config: dict
    tool_version: str
    master_seed: int
    files: dict
    started: str
    finished: str
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_outputs(result: SweepResult, out_dir, started: str | None = None,
                  figures: bool = True) -> tuple[Report, RunManifest]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    summaries = summarize(result)
    report = fit_and_report(summaries, cfg.mode)
    files = {}

    def put(name, header, rows):
        write_csv(out / name, header, rows)
        files[name] = name

    put("trials.csv", TRIAL_FIELDS, (r.row() for r in result.records))
    put("timings.csv", TIMING_FIELDS, (r.timing_row() for r in result.records))
    put("cells.csv", CELL_FIELDS, (s.row() for s in summaries))
    put("cell_timings.csv", CELL_TIMING_FIELDS, (s.timing_row() for s in summaries))
    put("fits.csv", FIT_FIELDS, fit_rows(report))
    put("diagnostics.csv", ["trial", "ec_exp", "ec_con", "f1", "f2", "max_gap", "g_n", "spurious_count"],
        ([f"{r.cell}:{r.trial}", r.ec_exp, r.ec_con, r.f1, r.f2, r.max_gap, r.g_n, r.N_S]
         for r in result.records if not r.dropped))
    put("recoverability.csv",
        ["trial", "seed", "theta_T", "gamma", "k", "n", "m", "R_gen", "R_prequel", "U_size", "PH_size"],
        ([f"{r.cell}:{r.trial}", r.seed, r.theta_T, r.gamma, r.k, r.n, r.m, r.R_gen, r.R_prequel,
          r.U_size, r.PH_size] for r in result.records))
    for sf in report.fits:
        tag = f"theta{fmt(sf.theta_T)}_gamma{fmt(sf.gamma)}"
        name = f"{cfg.mode}_{tag}.dat"
        write_dat(out / name, sf.xs, sf.ys, sf.kind)
        files[name] = name
    if cfg.mode == "runtime":
        valid = sorted((s for s in summaries if s.valid), key=lambda s: s.cell.k)
        scale = report.runtime_scale
        write_dat(out / "runtime_measured.dat", [s.cell.k for s in valid],
                  [s.mean_t_chain_ext for s in valid], "k mean_chain_plus_extension_seconds")
        write_dat(out / "runtime_predicted.dat", [s.cell.k for s in valid],
                  [scale * s.predicted_f for s in valid],
                  f"k predicted m*n^Ca*ln(n) scaled by {fmt(scale)} (own anchor at smallest k)")
        files["runtime_measured.dat"] = "runtime_measured.dat"
        files["runtime_predicted.dat"] = "runtime_predicted.dat"
    if figures:
        from .plotting import render_report

        for name in render_report(report, out):
            files[name] = name
    notes = {"warnings": report.warnings}
    if cfg.mode == "runtime":
        notes.update(own_runtime_scale=report.runtime_scale, reference_runtime_scale=REFERENCE_RUNTIME_SCALE,
                     proxy_time_pearson_r=report.proxy_correlation)
    manifest = RunManifest(cfg.to_dict(), __version__, cfg.master_seed, files,
                           started or utc_now(), utc_now(), notes)
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return report, manifest


@dataclass
class ReplayResult:
    analysis: PairAnalysis
    U_size: int
    R_gen: float
    R_prequel: float


def replay(S, script: EditScript, k: int, xi: float | None = None) -> ReplayResult:
    """Run the pipeline on a fixed reference and edit script."""
    S = np.asarray(S, np.uint8)
    script.validate_against(S)
    S_prime = script.apply(S)
    if S_prime.size < k:
        raise DegenerateInstanceError(f"|S'|={S_prime.size} < k={k}")
    a = analyze_pair(S, S_prime, script, k, 1.0 / S.size if xi is None else xi)
    U = non_recoverable(a.path, S, S_prime)
    rep = recoverability_report(a.chain, a.path, U)
    return ReplayResult(a, U.size, rep.generalized, rep.prequel)
