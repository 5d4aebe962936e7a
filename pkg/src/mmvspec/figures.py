"""Figure rendering for experiment outputs.

Every experiment run produces one PNG summarizing its aggregate table,
written next to the delimited files. The Agg backend keeps rendering
headless; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = ["render"]

_DPI = 150


def _col(columns, rows, name):
    idx = list(columns).index(name)
    return [row[idx] for row in rows]


def _save(fig, out_dir, name) -> str:
    path = Path(out_dir) / name
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return name


def _fig_complete(cfg, acols, arows, extras, out_dir):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    L_values = sorted(set(_col(acols, arows, "L")))
    for L in L_values:
        pts = sorted((row[0], row[3]) for row in arows if row[1] == L)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"L = {L}")
    ax.set_xlabel("number of frequencies r")
    ax.set_ylabel("exact recovery rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.grid(True, alpha=0.3)
    ax.set_title("Completion success vs model order")
    return [_save(fig, out_dir, "complete.png")]


def _fig_denoise(cfg, acols, arows, extras, out_dir):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    L = _col(acols, arows, "L")
    ax.loglog(L, _col(acols, arows, "median_mse"), "o-", label="median per-vector MSE")
    ax.loglog(L, _col(acols, arows, "median_bound"), "s--", label="oracle bound")
    ax.set_xlabel("snapshots L")
    ax.set_ylabel("MSE")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title("Denoising error vs snapshot count")
    return [_save(fig, out_dir, "denoise.png")]


def _fig_covariance(cfg, acols, arows, extras, out_dir):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for r in sorted(set(_col(acols, arows, "r"))):
        pts = sorted((row[1], row[3]) for row in arows if row[0] == r)
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"r = {r}")
    ax.set_xlabel("snapshots L")
    ax.set_ylabel("median relative lag error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title("Covariance estimation error")
    return [_save(fig, out_dir, "covariance.png")]


def _fig_phase(cfg, acols, arows, extras, out_dir):
    deltas = sorted(set(_col(acols, arows, "delta")))
    Ls = sorted(set(_col(acols, arows, "L")))
    panels = [("atomic", "full"), ("atomic", "half"),
              ("covariance", "full"), ("covariance", "half")]
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharex=True, sharey=True)
    for ax, (method, obs) in zip(axes.ravel(), panels):
        grid = np.full((len(deltas), len(Ls)), np.nan)
        for row in arows:
            if row[2] == method and row[3] == obs:
                grid[deltas.index(row[0]), Ls.index(row[1])] = row[5]
        im = ax.imshow(grid, origin="lower", aspect="auto", vmin=0, vmax=1,
                       cmap="viridis")
        ax.set_xticks(range(len(Ls)), [str(v) for v in Ls])
        ax.set_yticks(range(len(deltas)), [f"{v:g}" for v in deltas])
        ax.set_title(f"{method}, {obs} observations")
        ax.set_xlabel("snapshots L")
        ax.set_ylabel("separation (units of 1/n)")
    fig.colorbar(im, ax=axes.ravel().tolist(), label="success rate")
    fig.suptitle("Frequency recovery phase transition")
    return [_save(fig, out_dir, "phase-transition.png")]


def _fig_crb(cfg, acols, arows, extras, out_dir):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    L = _col(acols, arows, "L")
    ax.semilogy(L, _col(acols, arows, "mean_freq_mse"), "o-",
                label="frequency MSE (dual peaks)")
    ax.semilogy(L, _col(acols, arows, "mean_crb"), "s--", label="CRB")
    ax.set_xlabel("snapshots L")
    ax.set_ylabel("mean squared frequency error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title("Frequency estimation vs the CRB")
    return [_save(fig, out_dir, "crb-compare.png")]


def _fig_baseline(cfg, acols, arows, extras, out_dir):
    methods = _col(acols, arows, "method")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    x = np.arange(len(methods))
    ax1.bar(x, _col(acols, arows, "success_rate"), color="tab:blue")
    ax1.set_xticks(x, methods, rotation=15)
    ax1.set_ylim(0, 1.05)
    ax1.set_ylabel("success rate")
    ax1.grid(True, axis="y", alpha=0.3)
    ax2.bar(x, _col(acols, arows, "mean_count"), color="tab:orange")
    ax2.set_xticks(x, methods, rotation=15)
    ax2.set_ylabel("mean number of estimated frequencies")
    ax2.grid(True, axis="y", alpha=0.3)
    fig.suptitle("Baseline comparison")
    fig.tight_layout()
    return [_save(fig, out_dir, "baseline-compare.png")]


def _fig_localize(cfg, acols, arows, extras, out_dir):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    truths = extras.get("true_freqs", [])
    f, v = extras["dual_curve"]
    ax1.plot(f, v, lw=0.8)
    for x in truths:
        ax1.axvline(x, color="gray", ls=":", lw=0.8)
    est = extras.get("atomic_freqs", [])
    if est:
        ax1.plot(est, np.ones(len(est)), "rv", label="located")
        ax1.legend()
    ax1.axhline(1.0, color="k", lw=0.5)
    ax1.set_ylabel("dual polynomial norm")
    ax1.grid(True, alpha=0.3)
    f2, v2 = extras["pseudospectrum"]
    finite = np.isfinite(v2)
    ax2.semilogy(f2[finite], np.maximum(v2[finite], 1e-300), lw=0.8)
    for x in truths:
        ax2.axvline(x, color="gray", ls=":", lw=0.8)
    est2 = extras.get("covariance_freqs", [])
    for x in est2:
        ax2.axvline(x, color="red", ls="--", lw=0.6)
    ax2.set_ylabel("pseudospectrum")
    ax2.set_xlabel("frequency")
    ax2.grid(True, alpha=0.3)
    fig.suptitle("Localization curves (dashed red: subspace estimates)")
    return [_save(fig, out_dir, "localize.png")]


_RENDERERS = {
    "complete": _fig_complete,
    "denoise": _fig_denoise,
    "covariance": _fig_covariance,
    "phase-transition": _fig_phase,
    "crb-compare": _fig_crb,
    "baseline-compare": _fig_baseline,
    "localize": _fig_localize,
}


def render(cfg, tcols, trows, acols, arows, extras, out_dir) -> list[str]:
    """Render the figure for one experiment; returns written file names."""
    fn = _RENDERERS.get(cfg.kind)
    if fn is None or not arows:
        return []
    return fn(cfg, acols, arows, extras, out_dir)
