"""Report assembly: tables, delimited output, and companion figures.

Every report path writes machine-readable output (JSON/CSV) and, next to
it, a rendered matplotlib figure of the same data.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fileio import atomic_write_bytes
from .hdr_core import LuminanceHistogram
from .metrics import prediction_error, stage_success_rates


def rollout_report(records) -> dict:
    """Per-object success-rate / prediction-error summary of a roll-out log."""
    rates = stage_success_rates(records)
    errors = prediction_error(records)
    return {
        "task": records[0].task,
        "rollouts": len(records),
        "prediction_error_over": "all-attempts",
        "objects": [
            {"object": obj, "success_rate": rates[obj], "prediction_error_mm": errors[obj]}
            for obj in rates
        ],
    }


def format_report_table(report: dict) -> str:
    """Plain-text table with S.R. and P.E. columns per object."""
    header = f"{'Object':<16}{'S. R.':>8}{'P. E. (mm)':>14}"
    lines = [header, "-" * len(header)]
    for row in report["objects"]:
        lines.append(
            f"{row['object']:<16}{row['success_rate']:>8.2f}{row['prediction_error_mm']:>14.2f}")
    return "\n".join(lines) + "\n"


def write_report_files(report: dict, output_dir, stem: str = "rollout_report") -> dict:
    """JSON + CSV + text table + bar figure; returns the written paths."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": output_dir / f"{stem}.json",
        "csv": output_dir / f"{stem}.csv",
        "txt": output_dir / f"{stem}.txt",
        "figure": output_dir / f"{stem}.png",
    }
    atomic_write_bytes(paths["json"], (json.dumps(report, indent=2, sort_keys=True) + "\n").encode())
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object", "success_rate", "prediction_error_mm"])
        for row in report["objects"]:
            writer.writerow([row["object"], row["success_rate"], row["prediction_error_mm"]])
    paths["txt"].write_text(format_report_table(report))
    plot_rollout_report(report, paths["figure"])
    return {k: str(v) for k, v in paths.items()}


def plot_rollout_report(report: dict, path) -> None:
    objects = [row["object"] for row in report["objects"]]
    rates = [row["success_rate"] for row in report["objects"]]
    errors = [row["prediction_error_mm"] for row in report["objects"]]
    x = np.arange(len(objects))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.bar(x, rates, color="#4d78a8")
    ax1.set_xticks(x, objects, rotation=20)
    ax1.set_ylim(0, 1)
    ax1.set_ylabel("stage success rate")
    ax2.bar(x, errors, color="#f28f2b")
    ax2.set_xticks(x, objects, rotation=20)
    ax2.set_ylabel("prediction error (mm)")
    fig.suptitle(f"{report['task']} ({report['rollouts']} roll-outs)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_histograms(histograms: dict, path, title: str = "Luminance distribution") -> None:
    """Overlayed step plots of named LuminanceHistogram objects."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, hist in histograms.items():
        edges = np.linspace(hist.lo, hist.hi, hist.bin_count + 1)
        ax.stairs(hist.normalized(), edges, label=label)
    first = next(iter(histograms.values()))
    ax.set_xlabel(f"luminance ({first.domain_tag})")
    ax.set_ylabel("fraction of pixels")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_fidelity_report(report: dict, output_dir, histograms: dict | None = None,
                          stem: str = "fidelity_report") -> dict:
    """Fidelity comparison report: JSON + CSV plus a histogram figure."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": output_dir / f"{stem}.json",
        "csv": output_dir / f"{stem}.csv",
    }
    atomic_write_bytes(paths["json"], (json.dumps(report, indent=2, sort_keys=True) + "\n").encode())
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key, value in sorted(report.items()):
            if isinstance(value, (int, float)):
                writer.writerow([key, value])
    if histograms:
        paths["figure"] = output_dir / f"{stem}_histogram.png"
        plot_histograms(histograms, paths["figure"])
    return {k: str(v) for k, v in paths.items()}
