"""Matplotlib report figures rendered next to the delimited outputs."""
from __future__ import annotations

import csv
from dataclasses import asdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evalmetrics import EvalReport, rasterize_layout  # noqa: E402
from .layout import BoxLayout, CategoryTaxonomy, DEFAULT_TAXONOMY  # noqa: E402


def save_raster_grid(gen: list[BoxLayout], ref: list[BoxLayout], path,
                     per_row: int = 8,
                     taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> None:
    """Top rows: generated layouts; bottom rows: reference layouts."""
    n = per_row
    rows = [("generated", gen[:n]), ("reference", ref[:n])]
    fig, axes = plt.subplots(2, n, figsize=(1.6 * n, 3.6))
    for r, (label, layouts) in enumerate(rows):
        for c in range(n):
            ax = axes[r, c]
            ax.set_xticks([])
            ax.set_yticks([])
            if c < len(layouts):
                ax.imshow(rasterize_layout(layouts[c], 128, taxonomy))
            else:
                ax.axis("off")
            if c == 0:
                ax.set_ylabel(label, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metrics_figure(report: EvalReport, path) -> None:
    fields = ["fd_surrogate", "kd_surrogate", "floating_rate",
              "mean_pairwise_iou"]
    values = [getattr(report, f) for f in fields]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(range(len(fields)), values, color="#4878a8")
    ax.set_xticks(range(len(fields)))
    ax.set_xticklabels([f.replace("_", "\n") for f in fields], fontsize=8)
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.3g}", ha="center", va="bottom", fontsize=8)
    ax.set_title(f"layout metrics (n_gen={report.n_gen}, n_ref={report.n_ref})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_curve(log: list[dict], path) -> None:
    steps = [e["epoch"] for e in log]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(steps, [e["noise_term"] for e in log], label="noise", lw=0.8)
    ax.plot(steps, [e["iou_term"] for e in log], label="iou", lw=0.8)
    ax.plot(steps, [e["total"] for e in log], label="total", lw=0.8, ls="--")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_report_csv(report: EvalReport, path) -> None:
    data = asdict(report)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=sorted(data))
        writer.writeheader()
        writer.writerow(data)


def dump_rasters(layouts: list[BoxLayout], directory, resolution: int = 256,
                 taxonomy: CategoryTaxonomy = DEFAULT_TAXONOMY) -> list[str]:
    """8-bit RGB PNG per layout; returns the written paths."""
    import os

    from .evalmetrics import raster_to_u8

    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, layout in enumerate(layouts):
        name = layout.id or f"layout{i:04d}"
        path = os.path.join(directory, f"{name}.png")
        matplotlib.image.imsave(
            path, raster_to_u8(rasterize_layout(layout, resolution, taxonomy)))
        paths.append(path)
    return paths
