"""Render evaluation reports: delimited files plus matplotlib figures.

Every report writer emits a CSV and, next to it, a PNG rendering of the same
data, so runs are inspectable without further tooling.
"""
from __future__ import annotations

import csv
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import PRCurve, SweepResult


def figure_path_for(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


def write_curve_csv(curve: PRCurve, path: str) -> None:
    """Columns: theta, recall, precision (measured points only)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "recall", "precision"])
        for theta, (recall, precision) in zip(curve.thresholds,
                                              curve.measured_points()):
            writer.writerow([theta, recall, precision])


def render_curve_figure(curve: PRCurve, path: str,
                        title: str = "Precision-recall") -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    recalls = [r for r, _ in curve.points]
    precisions = [p for _, p in curve.points]
    ax.plot(recalls, precisions, marker="o", markersize=3.5, linewidth=1.2)
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.set_title(f"{title} (AUC = {curve.auc:.3f})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curve_report(curve: PRCurve, csv_path: str,
                      title: str = "Precision-recall") -> str:
    write_curve_csv(curve, csv_path)
    png = figure_path_for(csv_path)
    render_curve_figure(curve, png, title)
    return png


_SWEEP_COLUMNS = ("family", "scheme", "linkage", "cut_threshold",
                  "min_cluster_size", "method", "k")


def write_sweep_csv(results: Sequence[SweepResult], path: str) -> None:
    """Columns: the config axes, validation_pr_auc, wall_time_ms."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(_SWEEP_COLUMNS) + ["validation_pr_auc",
                                                "wall_time_ms", "error"])
        for r in results:
            record = r.config.to_record()
            writer.writerow([record[c] for c in _SWEEP_COLUMNS]
                            + [r.validation_pr_auc, round(r.wall_time_ms, 3),
                               r.error or ""])


def render_sweep_figure(results: Sequence[SweepResult], path: str,
                        top_n: int = 20) -> None:
    top = list(results[:top_n])
    labels = [
        "{family}/{scheme}/{linkage} cut={cut_threshold} "
        "min={min_cluster_size} {method} k={k}".format(**r.config.to_record())
        for r in top
    ]
    fig, ax = plt.subplots(figsize=(8, max(2.5, 0.32 * len(top) + 1.2)))
    y = range(len(top))
    ax.barh(list(y), [r.validation_pr_auc for r in top], color="#4878a8")
    ax.set_yticks(list(y))
    ax.set_yticklabels(labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("Validation PR-AUC")
    ax.set_xlim(0, 1.05)
    ax.set_title(f"Top {len(top)} sweep configurations")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_report(results: Sequence[SweepResult], csv_path: str,
                      top_n: int = 20) -> str:
    write_sweep_csv(results, csv_path)
    png = figure_path_for(csv_path)
    render_sweep_figure(results, png, top_n)
    return png
