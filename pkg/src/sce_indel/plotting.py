"""Matplotlib figures for sweep reports (headless Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _recoverability_figure(report, path: Path) -> None:
    fig, (ax, bx) = plt.subplots(1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [2, 1]})
    labels, slopes, lo, hi = [], [], [], []
    for sf in report.fits:
        if not sf.xs:
            continue
        label = f"θT={sf.theta_T:g}, γ={sf.gamma:g}"
        ax.loglog(sf.xs, sf.ys, "o", label=label)
        if sf.fit is not None:
            xs = np.array(sf.xs)
            ax.loglog(xs, np.exp(sf.fit.intercept) * xs ** sf.fit.slope, "-", lw=1)
            labels.append(label)
            slopes.append(sf.fit.slope)
            lo.append(sf.fit.slope - sf.fit.slope_ci95[0])
            hi.append(sf.fit.slope_ci95[1] - sf.fit.slope)
    ax.set_xlabel("mean |S'|")
    ax.set_ylabel("1 - mean R")
    ax.legend(fontsize=8)
    if slopes:
        y = np.arange(len(slopes))
        bx.errorbar(slopes, y, xerr=[lo, hi], fmt="o", capsize=3)
        bx.set_yticks(y, labels, fontsize=8)
    bx.axvline(-0.5, color="grey", ls="--", lw=1)
    bx.set_xlabel("fitted slope (95% CI)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _runtime_figure(report, path: Path) -> None:
    valid = sorted((s for s in report.summaries if s.valid), key=lambda s: s.cell.k)
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = [s.cell.k for s in valid]
    ax.semilogy(ks, [s.mean_t_chain_ext for s in valid], "o-", label="measured chain + extension")
    ax.semilogy(ks, [report.runtime_scale * s.predicted_f for s in valid], "s--",
                label="scaled m·n^(Cα)·ln n")
    ax.set_xlabel("k")
    ax.set_ylabel("seconds")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(report, out_dir) -> list[str]:
    """Write the figures for ``report`` and return their file names."""
    out = Path(out_dir)
    if report.mode == "runtime":
        name = "runtime.png"
        _runtime_figure(report, out / name)
    else:
        name = "recoverability.png"
        _recoverability_figure(report, out / name)
    return [name]
