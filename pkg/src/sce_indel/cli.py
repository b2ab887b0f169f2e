"""Command line entry point: ``sce-indel <command> [options]``.

Exit status: 0 success, 1 bad parameters or usage, 2 degenerate input.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import FitError, check_EC, check_F1, check_F2, derive_constants
from .chaining import optimal_chain_fast
from .extension import full_alignment, gap_table
from .formats import (decode, dump_script, fmt, read_csv, read_fasta, parse_script, write_csv,
                      write_fasta)
from .harness import (Cell, CellSummary, SweepConfig, analyze_pair, fit_and_report, fit_rows,
                      FIT_FIELDS, make_cell, replay, sweep, trial_seed, utc_now, write_outputs)
from .recoverability import DegenerateInstanceError
from .seeding import AnchorClass, find_anchors, index_reference
from .seqgen import (MutationParams, ParameterError, generate_reference, mutate,
                     sample_simplex_rates)

_CLASS_NAMES = [c.value for c in AnchorClass]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="master seed (default 0, or the config's)")
    p.add_argument("--config", type=Path, help="flat key=value config file (or a run manifest)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--strict-theta", action="store_true", help="require theta_T < 0.159")
    return p


def _out(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _params(args, rng):
    explicit = [args.theta_s, args.theta_d, args.theta_i]
    if all(v is None for v in explicit):
        theta_i, theta_d, theta_s = sample_simplex_rates(args.theta_t, rng)
    elif any(v is None for v in explicit):
        raise ParameterError("give all of --theta-s/--theta-d/--theta-i or none")
    else:
        theta_s, theta_d, theta_i = explicit
    return MutationParams.from_total(theta_s, theta_d, theta_i, args.gamma, args.sigma, args.strict_theta)


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    params = _params(args, rng)
    m_prime = args.n if args.m_prime is None else args.m_prime
    S = generate_reference(args.n, args.sigma, rng)
    p = int(rng.integers(0, args.n - m_prime + 1)) if args.p is None else args.p
    pair = mutate(S, p, m_prime, params, rng)
    out = _out(args)
    write_fasta(out / "ref.fa", [("ref", S)])
    write_fasta(out / "query.fa", [("query", pair.S_prime)])
    (out / "script.edits").write_text(dump_script(pair.script))
    print(f"n={pair.n} m={pair.m} p={p} m_prime={m_prime} theta_s={fmt(params.theta_s)} "
          f"theta_d={fmt(params.theta_d)} theta_i={fmt(params.theta_i)}")
    return 0


def _load(path) -> np.ndarray:
    return read_fasta(path)[0][1]


def _write_anchors(path, anchors, codes=None):
    rows = []
    for idx, (i, j) in enumerate(anchors.pairs()):
        rows.append([i, j, anchors.k, "" if codes is None else _CLASS_NAMES[codes[idx]]])
    write_csv(path, ["i", "j", "k", "class"], rows)


def _write_chain(path, chain):
    write_csv(path, ["rank", "i", "j"], ([r + 1, i, j] for r, (i, j) in enumerate(chain.pairs())))
    with open(path, "a") as fh:
        fh.write(f"score={fmt(chain.score)}\n")


def cmd_align(args) -> int:
    S, T = _load(args.ref), _load(args.query)
    if T.size < args.k:
        raise DegenerateInstanceError(f"|S'|={T.size} < k={args.k}")
    anchors = find_anchors(index_reference(S, args.k, args.sigma), T)
    chain = optimal_chain_fast(anchors, 1.0 / S.size if args.xi is None else args.xi)
    aln, acct = full_alignment(S, T, chain, args.include_ends, args.p, args.m_prime)
    out = _out(args)
    _write_anchors(out / "anchors.csv", anchors)
    _write_chain(out / "chain.csv", chain)
    (out / "alignment.cigar").write_text(f"start={aln.start[0]},{aln.start[1]}\n{aln.cigar()}\n")
    write_csv(out / "gaps.tsv", ["ell", "x_lo", "x_hi", "y_lo", "y_hi", "dp_cells"], gap_table(chain),
              delimiter="\t")
    print(f"anchors={len(anchors)} chain={len(chain)} score={fmt(chain.score)} cost={aln.cost} "
          f"ext_cells={acct.ext_cells} chain_ops={acct.chain_ops}")
    return 0


def _scripted(args):
    S = _load(args.ref)
    script = parse_script(Path(args.script).read_text())
    return S, script


def cmd_classify(args) -> int:
    S, script = _scripted(args)
    script.validate_against(S)
    T = script.apply(S)
    if T.size < args.k:
        raise DegenerateInstanceError(f"|S'|={T.size} < k={args.k}")
    a = analyze_pair(S, T, script, args.k, 1.0 / S.size)
    _write_anchors(_out(args) / "anchors.csv", a.anchors, a.codes)
    counts = np.bincount(a.codes, minlength=3)
    print(f"N_H={counts[0]} N_C={counts[1]} N_S={counts[2]}")
    return 0


def cmd_recoverability(args) -> int:
    S, script = _scripted(args)
    res = replay(S, script, args.k, args.xi)
    a = res.analysis
    write_csv(_out(args) / "recoverability.csv",
              ["trial", "seed", "theta_T", "gamma", "k", "n", "m", "R_gen", "R_prequel", "U_size", "PH_size"],
              [[0, args.seed or 0, "", "", args.k, S.size, a.S_prime.size, res.R_gen, res.R_prequel,
                res.U_size, len(a.path)]])
    print(f"R_gen={fmt(res.R_gen)} R_prequel={fmt(res.R_prequel)} U_size={res.U_size} PH_size={len(a.path)}")
    return 0


def cmd_replay(args) -> int:
    S, script = _scripted(args)
    res = replay(S, script, args.k, args.xi)
    a = res.analysis
    out = _out(args)
    _write_anchors(out / "anchors.csv", a.anchors, a.codes)
    _write_chain(out / "chain.csv", a.chain)
    print(f"S'={decode(a.S_prime)}")
    print("path=" + " ".join(f"({x},{y})" for x, y in a.path.points))
    for (i, j), c in zip(a.anchors.pairs(), a.codes.tolist()):
        print(f"anchor ({i},{j}) {_CLASS_NAMES[c]}")
    print(f"chain={a.chain.pairs()} score={fmt(a.chain.score)}")
    print(f"R_gen={fmt(res.R_gen)} R_prequel={fmt(res.R_prequel)} U_size={res.U_size}")
    return 0


def _sweep_config(args) -> SweepConfig:
    cfg = SweepConfig.from_file(args.config) if args.config else SweepConfig()
    d = cfg.to_dict()
    if args.mode:
        d["mode"] = args.mode
    if args.iterations:
        d["iterations"] = args.iterations
    if args.seed is not None:
        d["master_seed"] = args.seed
    if args.strict_theta:
        d["strict"] = True
    return SweepConfig.from_dict(d)


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    started = utc_now()

    def progress(done, total):
        if not args.quiet and (done % 25 == 0 or done == total):
            print(f"\r{done}/{total} trials", end="", file=sys.stderr, flush=True)

    result = sweep(cfg, progress)
    if not args.quiet:
        print(file=sys.stderr)
    report, _ = write_outputs(result, _out(args), started, figures=not args.no_figures)
    for row in fit_rows(report):
        print(" ".join(fmt(v) for v in row))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _summaries_from_dir(path: Path) -> list[CellSummary]:
    timings = {}
    tfile = path / "cell_timings.csv"
    if tfile.exists():
        timings = {int(r["cell"]): r for r in read_csv(tfile)}
    out = []
    for r in read_csv(path / "cells.csv"):
        idx = int(r["cell"])
        cell = Cell(idx, float(r["theta_T"]), float(r["gamma"]), int(r["k"]), int(r["n"]), int(r["m_prime"]))
        t = timings.get(idx, {})
        out.append(CellSummary(
            cell, int(r["trials"]), int(r["dropped"]), float(r["mean_m"]), float(r["mean_R_gen"]),
            float(r["mean_R_prequel"]), float(r["mean_U_size"]), float(r["mean_PH_size"]),
            float(r["mean_ext_cells"]), float(r["mean_chain_ops"]),
            float(t.get("mean_t_chain", 0.0)), float(t.get("mean_t_ext", 0.0))))
    return out


def cmd_fit(args) -> int:
    summaries = _summaries_from_dir(args.input)
    report = fit_and_report(summaries, args.mode)
    out = _out(args)
    write_csv(out / "fits.csv", FIT_FIELDS, fit_rows(report))
    if not args.no_figures:
        from .plotting import render_report

        render_report(report, out)
    for row in fit_rows(report):
        print(" ".join(fmt(v) for v in row))
    return 0


def cmd_check_bounds(args) -> int:
    if args.n:
        n, k = args.n, args.k
    else:
        k = args.k or 28
        n = make_cell(0, args.theta_t, args.gamma, k, args.sigma, args.delta).n
    consts = derive_constants(args.sigma, args.theta_t, args.gamma, n, args.delta, k=k)
    for name in ("alpha", "C", "c_alpha", "k", "n", "beta", "t0", "xi", "g_n", "expansion_threshold",
                 "contraction_block", "c0"):
        print(f"{name}={fmt(getattr(consts, name))}")
    print(f"c_alpha_below_3.15_theta={int(consts.c_alpha_bound_ok)}")
    if consts.strict_warning:
        print("warning: theta_T >= 0.159, outside the analysed regime", file=sys.stderr)
    if args.trials:
        cell = make_cell(0, args.theta_t, args.gamma, consts.k, args.sigma, args.delta)
        rows = []
        for t in range(args.trials):
            rng = np.random.default_rng(trial_seed(args.seed or 0, 0, t))
            theta_i, theta_d, theta_s = sample_simplex_rates(args.theta_t, rng)
            params = MutationParams.from_total(theta_s, theta_d, theta_i, args.gamma, args.sigma,
                                               args.strict_theta)
            S = generate_reference(cell.n, args.sigma, rng)
            p = int(rng.integers(0, cell.n - cell.m_prime + 1))
            pair = mutate(S, p, cell.m_prime, params, rng)
            a = analyze_pair(S, pair.S_prime, pair.script, cell.k, 1.0 / cell.n)
            c = derive_constants(args.sigma, args.theta_t, args.gamma, cell.n, args.delta, theta_d, k=cell.k)
            exp_ok, con_ok = check_EC(pair.script, c)
            f1, spurious = check_F1(a.codes)
            f2, gap = check_F2(a.anchors, a.codes, pair.script, c.g_n)
            rows.append([t, exp_ok, con_ok, f1, f2, gap, c.g_n, spurious])
        write_csv(_out(args) / "diagnostics.csv",
                  ["trial", "ec_exp", "ec_con", "f1", "f2", "max_gap", "g_n", "spurious_count"], rows)
        arr = np.array([[not (r[1] and r[2]), not r[3], not r[4]] for r in rows], float)
        ec, f1, f2 = arr.mean(axis=0)
        print(f"trials={args.trials} n={cell.n} ec_violation={fmt(ec)} f1_violation={fmt(f1)} "
              f"f2_violation={fmt(f2)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="sce-indel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="random reference plus mutated query")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-prime", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--sigma", type=int, default=4)
    p.add_argument("--theta-t", type=float, default=0.1)
    p.add_argument("--theta-s", type=float)
    p.add_argument("--theta-d", type=float)
    p.add_argument("--theta-i", type=float)
    p.add_argument("--gamma", type=float, default=0.5)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("align", parents=[common], help="seed, chain and extend a FASTA pair")
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--query", type=Path, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma", type=int, default=4)
    p.add_argument("--xi", type=float)
    p.add_argument("--include-ends", action="store_true")
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--m-prime", type=int)
    p.set_defaults(func=cmd_align)

    for name, func, text in (("classify", cmd_classify, "classify anchors against the true path"),
                             ("recoverability", cmd_recoverability, "recoverability of the optimal chain"),
                             ("replay", cmd_replay, "replay an edit script end to end")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--ref", type=Path, required=True)
        p.add_argument("--script", type=Path, required=True)
        p.add_argument("--k", type=int, default=3)
        p.add_argument("--xi", type=float)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", parents=[common], help="run a recoverability or runtime sweep")
    p.add_argument("--mode", choices=["recoverability", "runtime"])
    p.add_argument("--iterations", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", parents=[common], help="refit a finished sweep directory")
    p.add_argument("--input", type=Path, required=True, help="directory holding cells.csv")
    p.add_argument("--mode", choices=["recoverability", "runtime"], default="recoverability")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check-bounds", parents=[common], help="constants and EC/F1/F2 frequencies")
    p.add_argument("--theta-t", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--sigma", type=int, default=4)
    p.add_argument("--k", type=int, help="seed length (default 28, or derived from --n)")
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=0)
    p.set_defaults(func=cmd_check_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except DegenerateInstanceError as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, FitError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
