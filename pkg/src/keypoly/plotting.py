"""Figures written next to CLI reports.

Uses the object-oriented Agg API only (no pyplot state), so figures can be
rendered from worker threads and repeated runs produce identical PNG bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .heatmap import Keypoint
from .metrics import EvalReport
from .polygonize import Polygon

METRIC_LABELS = (("f1", "F1-Score"), ("iou", "IoU"), ("ssim", "SSIM"), ("boundary_f", "F-Measure"))

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasAgg(fig)
    # drop the version string so output depends only on the data
    fig.savefig(path, dpi=100, metadata={"Software": None})
    return path


def plot_report(method: str, patches: Sequence[Tuple[str, EvalReport]], total: EvalReport, path) -> Path:
    """Aggregate scores as bars, with per-patch scores scattered on top."""
    with rc_context(STYLE):
        fig = Figure(figsize=(6.0, 3.2))
        ax = fig.add_subplot(1, 1, 1)
        xs = np.arange(len(METRIC_LABELS))
        means = [getattr(total, key) * 100 for key, _ in METRIC_LABELS]
        ax.bar(xs, means, width=0.6, color="#8da0cb", edgecolor="#4a5a8a", label=f"{method} (mean)")
        if patches:
            offsets = np.linspace(-0.2, 0.2, len(patches)) if len(patches) > 1 else np.zeros(1)
            for i, (key, _) in enumerate(METRIC_LABELS):
                vals = [getattr(rep, key) * 100 for _, rep in patches]
                ax.scatter(xs[i] + offsets, vals, s=6, color="#222222", alpha=0.5, linewidths=0, zorder=3)
        for x, m in zip(xs, means):
            ax.annotate(f"{m:.2f}", (x, m), textcoords="offset points", xytext=(0, 3), ha="center", fontsize=7)
        ax.set_xticks(xs)
        ax.set_xticklabels([label for _, label in METRIC_LABELS])
        ax.set_ylabel("score (%)")
        ax.set_ylim(0, 105)
        ax.set_title(f"{method}: {total.n_patches} patch{'es' if total.n_patches != 1 else ''}")
        ax.legend(loc="lower left", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_pipeline(
    heatmap: np.ndarray,
    keypoints: Sequence[Keypoint],
    polygon: Optional[Polygon],
    mask: np.ndarray,
    path,
    truth: Optional[np.ndarray] = None,
) -> Path:
    """Heatmap with detected peaks, and the rasterized polygon over the truth mask."""
    with rc_context(STYLE):
        fig = Figure(figsize=(6.4, 3.2))
        ax_h, ax_m = fig.add_subplot(1, 2, 1), fig.add_subplot(1, 2, 2)
        ax_h.imshow(heatmap, cmap="magma", vmin=0, vmax=1, interpolation="nearest")
        if keypoints:
            ax_h.scatter([k.col for k in keypoints], [k.row for k in keypoints], s=12, marker="+", color="#00e5ff")
        ax_h.set_title(f"heatmap, {len(keypoints)} peaks")

        # 1 = prediction only, 2 = truth only, 3 = both
        overlay = mask.astype(np.int64)
        if truth is not None:
            overlay = overlay + 2 * truth.astype(np.int64)
        ax_m.imshow(overlay, cmap="Greys", vmin=0, vmax=3, interpolation="nearest")
        if polygon is not None:
            xs = [x for x, _ in polygon.vertices] + [polygon.vertices[0][0]]
            ys = [y for _, y in polygon.vertices] + [polygon.vertices[0][1]]
            # vertices sit on pixel corners; imshow puts pixel centers on integers
            ax_m.plot(np.array(xs) - 0.5, np.array(ys) - 0.5, color="#e7298a", linewidth=1.0)
        ax_m.set_title("polygon / mask" + (" vs truth" if truth is not None else ""))
        for ax in (ax_h, ax_m):
            ax.set_xticks([])
            ax.set_yticks([])
        fig.tight_layout()
        return _save(fig, path)
