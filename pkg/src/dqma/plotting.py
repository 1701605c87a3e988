"""Figures written next to the CSV outputs; uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_fit(res, path, truth=None) -> Path:
    """Median and HPD band of every coefficient over time, with the true path if given."""
    T, m = res.median.shape
    t = np.arange(1, T + 1)
    fig, axes = plt.subplots(m, 1, figsize=(7, 2.2 * m), sharex=True, squeeze=False)
    for j, ax in enumerate(axes[:, 0]):
        ax.fill_between(t, res.lo[:, j], res.hi[:, j], color="0.8", label="95% HPD")
        ax.plot(t, res.median[:, j], color="k", lw=1, label="median")
        if truth is not None:
            ax.plot(t, truth[:, j], color="tab:red", lw=1, ls="--", label="true")
        ax.set_ylabel(res.column_names[j])
    axes[0, 0].legend(loc="best", fontsize="small")
    axes[-1, 0].set_xlabel("t")
    fig.suptitle(f"tau = {res.tau:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_dma(res, path, tau: float) -> Path:
    """Predicted model probabilities (stacked) and the expected number of regressors."""
    t = np.array([r.t for r in res.steps])
    pm = np.array([r.pred_marginal for r in res.steps])
    size = np.array([r.expected_size for r in res.steps])
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    a1.stackplot(t, pm.T, labels=[m.label() for m in res.models])
    a1.set_ylabel("model probability")
    a1.set_ylim(0, 1)
    if len(res.models) <= 8:
        a1.legend(loc="upper left", fontsize="x-small", ncol=4)
    a2.plot(t, size, color="k")
    a2.set_ylabel("expected size")
    a2.set_xlabel("t")
    fig.suptitle(f"tau = {tau:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
