"""Render the benchmark figures (success rate, traversed distance, elapsed
time) from a results directory produced by the `run` subcommand."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_figures"]

_COLORS = {"flat": "tab:blue", "hierarchical": "tab:orange"}


def _cell_label(cell: dict) -> str:
    return f"{cell['mode']} H={cell['horizon']}"


def _grouped_bars(ax, cells, values_key, ylabel, title):
    n_wp = len(cells[0]["success_rate"])
    x = np.arange(1, n_wp + 1, dtype=float)
    width = 0.8 / len(cells)
    for i, cell in enumerate(cells):
        vals = cell[values_key]
        vals = [np.nan if v is None else v for v in vals]
        ax.bar(
            x + (i - (len(cells) - 1) / 2) * width,
            vals,
            width,
            label=_cell_label(cell),
            color=_COLORS.get(cell["mode"]),
            alpha=0.4 + 0.2 * (cell["horizon"] // 20),
            edgecolor="black",
            linewidth=0.5,
        )
    ax.set_xticks(x)
    ax.set_xlabel("waypoint")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)


def render_figures(results_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Read summary.json and write success/distance/time figures as PNGs."""
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = results_dir / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"no summary.json under {results_dir}")
    with open(summary_path) as fh:
        cells = json.load(fh)["cells"]
    if not cells:
        raise ValueError("summary.json contains no cells")

    written = []
    for key, ylabel, title, fname in [
        ("success_rate", "success rate", "Per-waypoint success rate", "fig_success_rate.png"),
        ("path_mean", "traversed distance [m]", "End-effector traversed distance at reach", "fig_distance.png"),
        ("time_mean", "elapsed time [s]", "Time from trial start to reach", "fig_time.png"),
    ]:
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, cells, key, ylabel, title)
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
