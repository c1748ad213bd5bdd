"""Figure rendering for metric tables.

One PNG heatmap per metric column: rows are methods, columns are
dataset/model pairs.  Written alongside the delimited report so a
directory of results is browsable without re-running anything.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import METRIC_COLUMNS, MetricTable

logger = logging.getLogger(__name__)


def _matrix_for(table: MetricTable, metric: str):
    methods = sorted({c.method for c in table.cells})
    columns = sorted({(c.dataset, c.model) for c in table.cells})
    grid = np.full((len(methods), len(columns)), np.nan)
    for c in table.cells:
        value = getattr(c, metric)
        if value is None:
            continue
        grid[methods.index(c.method), columns.index((c.dataset, c.model))] = value
    return methods, [f"{d}\n{m}" for d, m in columns], grid


def save_metric_heatmap(table: MetricTable, metric: str, out_path) -> Path:
    if metric not in METRIC_COLUMNS:
        raise ValueError(f"metric must be one of {METRIC_COLUMNS}, got {metric!r}")
    methods, columns, grid = _matrix_for(table, metric)
    if grid.size == 0:
        raise ValueError("empty table, nothing to plot")

    fig, ax = plt.subplots(
        figsize=(max(4.0, 1.1 * len(columns) + 2.0), max(3.0, 0.6 * len(methods) + 1.5)))
    cmap = "viridis_r" if metric == "robustness" else "viridis"
    im = ax.imshow(grid, cmap=cmap, aspect="auto")
    ax.set_xticks(range(len(columns)), labels=columns, fontsize=8)
    ax.set_yticks(range(len(methods)), labels=methods, fontsize=8)
    title = metric + (" (lower is better)" if metric == "robustness" else "")
    ax.set_title(title)
    for i in range(len(methods)):
        for j in range(len(columns)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        fontsize=7, color="white")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()

    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def save_metric_figures(table: MetricTable, out_dir) -> list[Path]:
    """Render every populated metric column; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in METRIC_COLUMNS:
        if all(getattr(c, metric) is None for c in table.cells):
            logger.info("metric %s has no values; figure skipped", metric)
            continue
        written.append(save_metric_heatmap(table, metric, out_dir / f"{metric}.png"))
    return written
