"""Figure rendering for report paths.

Every report-producing CLI path renders its PNG figures next to the
JSON/TSV artifacts; figures are presentation only and never feed back
into any computation. The Agg backend keeps rendering headless.
"""

from __future__ import annotations

import logging
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

logger = logging.getLogger(__name__)

_DPI = 120


def plot_histogram(
    values: Sequence[float],
    path: str,
    *,
    xlabel: str,
    title: str,
    bins: int = 50,
    vline: float | None = None,
) -> str:
    """Render a histogram; returns the output path."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(list(values), bins=bins, color="#4878a8", edgecolor="white")
    if vline is not None:
        ax.axvline(vline, color="#c44e52", linestyle="--", label=f"{vline:g}")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_bar(
    labels: Sequence[str],
    values: Sequence[float],
    path: str,
    *,
    ylabel: str,
    title: str,
) -> str:
    """Render a labeled bar chart; returns the output path."""
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(labels)), 4))
    ax.bar(range(len(labels)), list(values), color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_curve(
    xs: Sequence[float],
    ys: Sequence[float],
    path: str,
    *,
    xlabel: str,
    ylabel: str,
    title: str,
    vline: float | None = None,
) -> str:
    """Render a line plot; returns the output path."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(list(xs), list(ys), marker="o", color="#4878a8")
    if vline is not None:
        ax.axvline(vline, color="#c44e52", linestyle="--", label=f"argmin = {vline:g}")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path
