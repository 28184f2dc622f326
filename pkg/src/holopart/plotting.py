"""PNG figures for run reports (matplotlib, headless Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_weights(path, angles, curves: dict, title: str = "weights") -> None:
    """Several positive grid functions on a log scale."""
    fig, ax = plt.subplots(figsize=(7, 3.6))
    for label, v in curves.items():
        ax.semilogy(angles, v, label=label, lw=1)
    ax.set_xlabel("theta")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _finish(fig, path)


def plot_delta_sweep(path, rows: list[dict]) -> None:
    """Residual with error bars against delta, with the line residual = delta."""
    d = np.array([r["delta"] for r in rows])
    res = np.array([r["residual"] for r in rows])
    se = np.array([r["residual_stderr"] for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.errorbar(d, res, yerr=3 * se, fmt="o", capsize=3, label="residual (3 stderr)")
    xs = np.linspace(0, max(d.max(), 0.01) * 1.1, 50)
    ax.plot(xs, xs, "k--", lw=1, label="delta")
    ax.set_xlabel("delta")
    ax.set_ylabel("int |1 - phi| Delta dP")
    ax.legend(fontsize=8)
    _finish(fig, path)


def plot_residual_vs_paths(path, rows: list[dict]) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for delta in sorted({r["delta"] for r in rows}, reverse=True):
        sub = [r for r in rows if r["delta"] == delta]
        n = np.array([r["paths"] for r in sub])
        ax.errorbar(n, [r["residual"] for r in sub], yerr=[r["residual_stderr"] for r in sub], fmt="o-",
                    capsize=3, label=f"delta = {delta:g}")
    ax.set_xscale("log")
    ax.set_xlabel("paths")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    _finish(fig, path)


def plot_lambda_sweep(path, sweeps: dict) -> None:
    """h-mass against lambda per q on log-log axes (zero masses are omitted)."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for q, rows in sweeps.items():
        lam = np.array([r["lambda"] for r in rows])
        hm = np.array([r["h_mass"] for r in rows])
        pos = hm > 0
        if pos.any():
            ax.loglog(lam[pos], hm[pos], "o-", label=f"q = {q:g}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("int |h|^2 Delta_1 dP")
    ax.legend(fontsize=8)
    _finish(fig, path)


def plot_havin(path, angles, rows: list[tuple[str, np.ndarray, np.ndarray, np.ndarray]]) -> None:
    """|alpha| and |beta| for a few boundary sets; each row is (label, mask, alpha, beta)."""
    fig, axes = plt.subplots(len(rows), 1, figsize=(7, 1.8 * len(rows)), sharex=True, squeeze=False)
    for ax, (label, mask, a, b) in zip(axes[:, 0], rows):
        ax.fill_between(angles, 0, mask.astype(float), color="0.9", step="mid")
        ax.plot(angles, np.abs(a), lw=1, label="|alpha|")
        ax.plot(angles, np.abs(b), lw=1, label="|beta|")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(label, fontsize=9)
    axes[0, 0].legend(fontsize=7, loc="upper right")
    axes[-1, 0].set_xlabel("theta")
    _finish(fig, path)


def plot_ratios(path, labels: list[str], values: list[float], bound: float | None, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    if bound is not None:
        ax.axhline(bound, color="k", ls="--", lw=1)
    ax.set_ylabel(ylabel)
    _finish(fig, path)
