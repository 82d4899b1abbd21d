"""Figure rendering for report outputs.

Every plot function takes prepared data and writes one PNG; nothing here
computes metrics. The Agg backend is forced so rendering works headless,
and figures are closed after saving so batch runs don't accumulate state.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import MetricError


def save_loudness_histogram(
    values: list[float],
    out_path: str | Path,
    title: str = "Integrated loudness",
    xlabel: str = "LUFS",
    target: tuple[float, float] | None = (-18.0, -14.0),
    bins: int = 30,
) -> Path:
    """Distribution of a loudness measurement with the target band shaded."""
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        raise MetricError("histogram needs at least one value; no finite values given")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(finite, bins=bins, color="#4878a8", edgecolor="white")
    if target is not None:
        ax.axvspan(target[0], target[1], color="#74c476", alpha=0.25, label="target range")
        ax.legend()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("files")
    out_path = Path(out_path)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def save_box_plot(
    distributions: dict[str, list[float]],
    out_path: str | Path,
    title: str = "Score distribution by system",
    ylabel: str = "score",
) -> Path:
    """Per-system box plot of pooled scores (listening-test aggregate)."""
    if not distributions or not any(distributions.values()):
        raise MetricError("box plot needs at least one non-empty distribution")
    systems = sorted(distributions)
    data = [distributions[s] for s in systems]
    fig, ax = plt.subplots(figsize=(max(6, 1.5 * len(systems)), 4.5))
    ax.boxplot(data, tick_labels=systems, showmeans=True)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)
    out_path = Path(out_path)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def save_radar(
    payload: dict,
    out_path: str | Path,
    title: str = "Normalized system profile",
) -> Path:
    """Radar chart from the {axes, series} payload of the system report.

    Missing values (None) break the polygon rather than being drawn as 0.
    """
    axes = payload.get("axes", [])
    series = payload.get("series", [])
    if not axes or not series:
        raise MetricError("radar payload needs at least one axis and one series")
    if len(axes) < 3:
        # A radar needs at least a triangle; fall back to a bar chart.
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / max(1, len(series))
        x = np.arange(len(axes))
        for i, s in enumerate(series):
            vals = [v if v is not None else 0.0 for v in s["values"]]
            ax.bar(x + i * width, vals, width=width, label=s["system"])
        ax.set_xticks(x + width * (len(series) - 1) / 2)
        ax.set_xticklabels(axes, rotation=30, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_title(title)
        ax.legend()
    else:
        angles = np.linspace(0, 2 * np.pi, len(axes), endpoint=False)
        closed_angles = np.concatenate([angles, angles[:1]])
        fig, ax = plt.subplots(figsize=(7, 6), subplot_kw={"projection": "polar"})
        for s in series:
            vals = np.array(
                [v if v is not None else np.nan for v in s["values"]], dtype=float
            )
            closed = np.concatenate([vals, vals[:1]])
            ax.plot(closed_angles, closed, label=s["system"], linewidth=1.6)
            ax.fill(closed_angles, np.nan_to_num(closed), alpha=0.12)
        ax.set_xticks(angles)
        ax.set_xticklabels(axes, fontsize=8)
        ax.set_ylim(0, 1.0)
        ax.set_title(title)
        ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1), fontsize=8)
    out_path = Path(out_path)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
