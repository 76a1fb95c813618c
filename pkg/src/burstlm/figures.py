"""Figure rendering for fits, rate curves, window sweeps, and reports.

Everything renders straight to files through the Agg backend; no display is
assumed.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import SweepPoint
from .lm import LanguageModel
from .ratemodel import RateProfile

_DPI = 150


def render_fit_figure(
    histogram: Mapping[int, int],
    profile: RateProfile,
    path: str,
    title: str = "",
) -> None:
    """Observed occurrence histogram with the fitted pmf overlaid.

    The histogram buckets normalized per-document counts; the profile curve
    is scaled to the same document total.
    """
    n_docs = sum(histogram.values())
    xs = sorted(histogram)
    top = max(int(profile.support_end), max(xs) if xs else 0)
    top = min(top, profile.n_tokens)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.bar(xs, [histogram[x] for x in xs], width=0.9, color="#9ecae1", label="observed")
    grid = np.arange(top + 1)
    pmf = np.array([profile.pmf(int(x)) for x in grid])
    ax.plot(grid, pmf * n_docs, "o-", ms=3, lw=1.2, color="#d62728", label="fitted")
    ax.set_xlabel(f"occurrences per {profile.n_tokens}-token document")
    ax.set_ylabel("documents")
    ax.set_title(title or profile.event)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_rate_curves(
    curves: Mapping[str, Sequence[tuple[int, float]]],
    path: str,
    title: str = "conditional relative frequency",
) -> None:
    """Relative-frequency-vs-count curves, one line per event, log y scale."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, points in curves.items():
        ns = [n for n, _ in points]
        fs = [f for _, f in points]
        ax.plot(ns, fs, marker=".", ms=4, lw=1.2, label=label)
    ax.set_xlabel("observed count n")
    ax.set_ylabel("estimated relative frequency")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_sweep_figure(
    points: Sequence[SweepPoint],
    path: str,
    baseline: float | None = None,
    title: str = "perplexity vs window size",
) -> None:
    """Perplexity against window size, with an optional static-model line."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs = [p.window for p in points]
    ys = [p.perplexity for p in points]
    ax.plot(xs, ys, "o-", color="#1f77b4", label="adaptive")
    if baseline is not None:
        ax.axhline(baseline, color="#7f7f7f", ls="--", lw=1.0, label="static")
    ax.set_xscale("log")
    ax.set_xlabel("window size (tokens)")
    ax.set_ylabel("perplexity")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_report_figure(
    token_log_probs: Sequence[float],
    path: str,
    chunk: int = 200,
    title: str = "running perplexity",
) -> None:
    """Running and per-chunk perplexity over the evaluated stream."""
    logps = np.asarray(token_log_probs, dtype=np.float64)
    if logps.size == 0:
        raise ValueError("nothing to plot: no scored tokens")
    positions = np.arange(1, logps.size + 1)
    running = np.exp(-np.cumsum(logps) / positions)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(positions, running, color="#1f77b4", lw=1.2, label="running")
    n_chunks = math.ceil(logps.size / chunk)
    if n_chunks > 1:
        mids = []
        vals = []
        for ci in range(n_chunks):
            part = logps[ci * chunk : (ci + 1) * chunk]
            mids.append(ci * chunk + part.size / 2)
            vals.append(math.exp(-float(part.mean())))
        ax.plot(mids, vals, ".", ms=4, color="#d62728", alpha=0.6, label=f"per {chunk} tokens")
    ax.set_xlabel("tokens scored")
    ax.set_ylabel("perplexity")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
