"""Benchmark figure rendering.

Turns the plot-data series emitted by the benchmark harness into PNG
figures, one per panel, written alongside the delimited output. Rendering
is kept out of the harness itself so headless benchmark runs never import
a plotting backend.
"""

from __future__ import annotations

from pathlib import Path as FsPath
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_PANELS = {
    "success_vs_agents": ("agents", "success fraction", "Success rate by agent count"),
    "success_vs_epsilon": ("epsilon", "success fraction", "Success rate by epsilon"),
    "runtime_vs_agents": ("agents", "mean runtime (s)", "Runtime by agent count"),
    "welfare_vs_epsilon": ("epsilon", "mean social welfare", "Welfare by epsilon"),
}


def _plot_panel(ax, panel_series: Sequence[dict], xlabel: str, ylabel: str, title: str):
    for entry in panel_series:
        xs = [x for x, y in zip(entry["x"], entry["y"]) if y is not None]
        ys = [y for y in entry["y"] if y is not None]
        if not xs:
            continue
        ax.plot(xs, ys, marker="o", label=entry["label"])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if any(e["x"] for e in panel_series):
        ax.legend(fontsize=8)


def render_figures(series: dict, out_dir: str | FsPath, stem: str) -> list[FsPath]:
    """Write one PNG per known panel; returns the paths written."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for panel, (xlabel, ylabel, title) in _PANELS.items():
        entries = series.get(panel)
        if not entries:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        _plot_panel(ax, entries, xlabel, ylabel, title)
        if panel.startswith("success"):
            ax.set_ylim(-0.05, 1.05)
        fig.tight_layout()
        path = out_dir / f"{stem}_{panel}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
