"""Static figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .weg import RETARGETING, SPECIALIZED, TEMPLATE_SELECTION, WINDOW_INIT  # noqa: E402

PHASE_COLORS = {
    WINDOW_INIT: "tab:red",
    TEMPLATE_SELECTION: "tab:orange",
    RETARGETING: "tab:purple",
    SPECIALIZED: "tab:green",
    "Oracle": "tab:gray",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_skew_cdf(curves, path, max_n=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    n = curves.n_values
    if max_n is not None:
        keep = n <= max_n
    else:
        keep = slice(None)
    for s, frac in sorted(curves.fractions.items()):
        ax.step(n[keep], frac[keep], where="post", label=f"{s:g}% skew")
    ax.set_xlabel("number of labels n")
    ax.set_ylabel("fraction of segments")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"{curves.num_segments} segments of {curves.segment_length} items")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_run(log, path, oracle_cost_ms=None):
    """Per-step phase strip and the running mean cost for one repetition."""
    t = np.array([r.t for r in log])
    cost = np.array([r.cost_ms for r in log])
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 4), sharex=True,
                                   gridspec_kw={"height_ratios": [1, 3]})
    for phase, color in PHASE_COLORS.items():
        mask = np.array([r.phase == phase for r in log])
        if mask.any():
            ax0.scatter(t[mask], np.zeros(mask.sum()), c=color, marker="|", s=80, label=phase)
    ax0.set_yticks([])
    ax0.legend(ncol=5, fontsize=7, loc="upper center", bbox_to_anchor=(0.5, 1.6), frameon=False)
    ax1.plot(t, np.cumsum(cost) / (np.arange(len(cost)) + 1), lw=1.2, label="WEG")
    if oracle_cost_ms is not None:
        ax1.axhline(oracle_cost_ms, ls="--", c="k", lw=0.8, label="oracle only")
    ax1.set_xlabel("item")
    ax1.set_ylabel("running mean cost (ms)")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    _save(fig, path)


def plot_sweep(param, points, path):
    values = [pt.value for pt in points]
    speed = [pt.result.metrics.speedup for pt in points]
    acc = [pt.result.metrics.accuracy for pt in points]
    x = np.arange(len(values))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(x, speed, "o-", c="tab:blue")
    ax.set_ylabel("mean speedup", color="tab:blue")
    ax.set_xticks(x, [str(v) for v in values])
    ax.set_xlabel(param)
    ax2 = ax.twinx()
    ax2.plot(x, acc, "s--", c="tab:green")
    ax2.set_ylabel("accuracy", color="tab:green")
    ax.grid(alpha=0.3)
    _save(fig, path)
