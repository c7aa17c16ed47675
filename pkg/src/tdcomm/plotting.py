"""Static figures for the report command. Output is SVG with fixed ids and no
timestamps, so reruns produce identical files.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

TOPIC_COLORS = {
    "food": "#2ca02c",
    "expo": "#1f77b4",
    "politics": "#d62728",
    "noexpo": "#9467bd",
    "women": "#e377c2",
    "other": "#7f7f7f",
}

STYLE = {
    "svg.hashsalt": "tdcomm",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def figsize(scale=1.0, ratio=None):
    width = 5.5 * scale
    ratio = ratio or (math.sqrt(5) - 1.0) / 2.0
    return width, width * ratio


def save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None}, bbox_inches="tight")
    plt.close(fig)


def degree_distribution(hist: Mapping[int, int], path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        pts = sorted((k, c) for k, c in hist.items() if k > 0)
        if pts:
            total = sum(hist.values())
            ax.loglog([k for k, _ in pts], [c / total for _, c in pts], "o", ms=3, color="k")
        ax.set_xlabel("degree k")
        ax.set_ylabel("P(k)")
        save(fig, path)


def cumulative_sizes(curve: Sequence[tuple[int, float]], path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        if curve:
            ax.semilogx([r for r, _ in curve], [f for _, f in curve], color="k")
        ax.set_xlabel("community rank")
        ax.set_ylabel("cumulative fraction of users")
        ax.set_ylim(0, 1.02)
        save(fig, path)


def frame_ratio(ratios: Mapping[int, float | None], path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        pts = sorted((n, r) for n, r in ratios.items() if r is not None)
        if pts:
            ax.semilogx([n for n, _ in pts], [r for _, r in pts], "o-", color="k", base=2)
        ax.axhline(1.0, ls=":", lw=0.8, color="grey")
        ax.set_xlabel("frame length n (days)")
        ax.set_ylabel("communities(n) / communities(all)")
        save(fig, path)


def ratio_series(ratios: Sequence[float | None], path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(1.3, 0.35))
        days = [d for d, r in enumerate(ratios) if r is not None]
        ax.plot(days, [ratios[d] for d in days], ".-", ms=3, lw=0.8, color="k")
        ax.set_xlabel("day")
        ax.set_ylabel("communities / users")
        save(fig, path)


def lifespans(all_dist: Mapping[int, int], top_dist: Mapping[int, int], top_k: int, path):
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(1.3, 0.4))
        for ax, dist, title in ((axes[0], all_dist, "all communities"), (axes[1], top_dist, f"top {top_k}")):
            if dist:
                ax.bar(list(dist), list(dist.values()), color="0.4", width=0.8)
            ax.set_xlabel("lifespan d (days)")
            ax.set_ylabel("D(d)")
            ax.set_title(title)
        save(fig, path)


def evolution(days: Sequence[int], totals: Sequence[int], series: Sequence[tuple[int, str, Sequence[int]]], path):
    """Stacked daily user counts of the selected communities plus their lifetimes.

    ``series`` holds (community id, topic, per-day counts aligned with ``days``).
    """
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(
            2, 1, figsize=figsize(1.5, 0.7), sharex=True, gridspec_kw={"height_ratios": [2, 1]}
        )
        if series:
            top.stackplot(
                days,
                [s[2] for s in series],
                colors=[TOPIC_COLORS.get(s[1], TOPIC_COLORS["other"]) for s in series],
                linewidth=0.2,
                edgecolor="white",
            )
        top.plot(days, totals, color="k", lw=0.8, label="all users")
        top.set_ylabel("users per day")
        for row, (cid, topic, counts) in enumerate(series):
            active = [d for d, c in zip(days, counts) if c > 0]
            if active:
                bottom.hlines(row, min(active), max(active), lw=2,
                              color=TOPIC_COLORS.get(topic, TOPIC_COLORS["other"]))
        bottom.set_ylabel("community")
        bottom.set_xlabel("day")
        bottom.invert_yaxis()
        handles = [plt.Line2D([], [], color=c, lw=4, label=t) for t, c in TOPIC_COLORS.items()]
        top.legend(handles=handles, ncol=6, loc="upper center", bbox_to_anchor=(0.5, 1.18), frameon=False)
        save(fig, path)
