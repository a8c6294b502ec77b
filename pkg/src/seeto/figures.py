"""Matplotlib rendering for experiment reports (written next to the CSVs)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

_MODE_COLORS = {
    "seeto": "#c23b22",
    "baseline": "#3b6fb6",
    "seeto-ablation-solution-only": "#d88a2d",
    "seeto-ablation-model-only": "#57963f",
}


def _color(mode: str) -> str:
    return _MODE_COLORS.get(mode, "#777777")


def save_hv_trajectory_figure(
    task_id: str,
    per_mode: Dict[str, np.ndarray],
    path,
    analytic_hv: float | None = None,
) -> Path:
    """Median incumbent-HV trajectory per mode with an interquartile band.

    ``per_mode`` maps mode name to an (n_runs, n_fe) array of incumbent
    hypervolumes indexed by evaluation count.
    """
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.6, 3.2))
        for mode in sorted(per_mode):
            H = np.asarray(per_mode[mode], dtype=float)
            fe = np.arange(1, H.shape[1] + 1)
            med = np.median(H, axis=0)
            lo = np.percentile(H, 25, axis=0)
            hi = np.percentile(H, 75, axis=0)
            ax.plot(fe, med, label=mode, color=_color(mode), lw=1.6)
            ax.fill_between(fe, lo, hi, color=_color(mode), alpha=0.18, lw=0)
        if analytic_hv is not None:
            ax.axhline(analytic_hv, color="#444444", ls=":", lw=1.0, label="analytic")
        ax.set_xlabel("true evaluations")
        ax.set_ylabel("incumbent hypervolume")
        ax.set_title(task_id)
        ax.legend(fontsize=7, loc="lower right")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path


def save_summary_bar_figure(
    rows: Sequence[dict], reference_fe: int, path
) -> Path:
    """Grouped bars of mean HV at the reference budget, one group per task.

    ``rows`` are summary-table dicts carrying task_id, mode, and the
    hv<fe>_mean / hv<fe>_std columns.
    """
    path = Path(path)
    key_mean = f"hv{reference_fe}_mean"
    key_std = f"hv{reference_fe}_std"
    tasks = sorted({r["task_id"] for r in rows})
    modes = sorted({r["mode"] for r in rows})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(tasks) + 2), 3.4))
        width = 0.8 / max(1, len(modes))
        xs = np.arange(len(tasks))
        for k, mode in enumerate(modes):
            means, stds = [], []
            for t in tasks:
                row = next(
                    (r for r in rows if r["task_id"] == t and r["mode"] == mode), None
                )
                means.append(np.nan if row is None else float(row[key_mean]))
                stds.append(0.0 if row is None else float(row[key_std]))
            ax.bar(
                xs + (k - (len(modes) - 1) / 2) * width,
                means,
                width=width,
                yerr=stds,
                capsize=2,
                label=mode,
                color=_color(mode),
                error_kw={"lw": 0.8},
            )
        ax.set_xticks(xs)
        ax.set_xticklabels(tasks, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel(f"mean HV at FE={reference_fe}")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path
