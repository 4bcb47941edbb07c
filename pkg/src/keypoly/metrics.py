"""Mask and boundary accuracy measures.

Mask accuracy: pixel F1-score and IoU. Boundary accuracy: Gaussian-window SSIM
and a tolerance-matched boundary F-measure. Empty-vs-empty comparisons score a
perfect 1.0 throughout.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Iterable, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import distance_transform_edt

from .errors import ConfigError, ShapeError
from .raster import as_mask, extract_boundary

__all__ = [
    "BoundaryMatchConfig",
    "EvalReport",
    "mask_f1",
    "mask_iou",
    "boundary_ssim",
    "boundary_fmeasure",
    "evaluate_patch",
    "aggregate",
]


@dataclass(frozen=True)
class BoundaryMatchConfig:
    tolerance: float = 2.0

    def __post_init__(self):
        if not self.tolerance >= 0:
            raise ConfigError(f"boundary tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class EvalReport:
    """Scores for one patch, or the unweighted mean over ``n_patches``."""

    f1: float
    iou: float
    ssim: float
    boundary_f: float
    n_patches: int = 1

    def as_dict(self) -> dict:
        return asdict(self)


def _pair_masks(pred, truth) -> Tuple[np.ndarray, np.ndarray]:
    a = as_mask(pred).astype(bool)
    b = as_mask(truth).astype(bool)
    if a.shape != b.shape:
        raise ShapeError(f"pred shape {a.shape} != truth shape {b.shape}")
    return a, b


def mask_f1(pred, truth) -> float:
    a, b = _pair_masks(pred, truth)
    tp = int(np.count_nonzero(a & b))
    fp = int(np.count_nonzero(a & ~b))
    fn = int(np.count_nonzero(~a & b))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def mask_iou(pred, truth) -> float:
    a, b = _pair_masks(pred, truth)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def _valid_filter(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    k = taps.shape[0]
    tmp = sliding_window_view(img, k, axis=0) @ taps
    return sliding_window_view(tmp, k, axis=1) @ taps


def ssim_map(x, y, window: int = 11, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03, data_range: float = 1.0) -> np.ndarray:
    """Local SSIM for every fully contained window position."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ShapeError(f"SSIM operands must be 2-D grids of equal shape, got {x.shape} and {y.shape}")
    if min(x.shape) < window:
        raise ConfigError(f"grid {x.shape} is smaller than the {window}x{window} SSIM window")
    taps = gaussian_window(window, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_x = _valid_filter(x, taps)
    mu_y = _valid_filter(y, taps)
    var_x = _valid_filter(x * x, taps) - mu_x * mu_x
    var_y = _valid_filter(y * y, taps) - mu_y * mu_y
    cov = _valid_filter(x * y, taps) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def boundary_ssim(pred_boundary, truth_boundary, **kwargs) -> float:
    """Mean SSIM between two boundary maps (11x11 window, sigma 1.5, L = 1).

    Keyword arguments are forwarded to :func:`ssim_map`.
    """
    return float(ssim_map(pred_boundary, truth_boundary, **kwargs).mean())


def _count_matched(src: np.ndarray, ref: np.ndarray, tolerance: float) -> int:
    """Number of ``src`` pixels within ``tolerance`` of some ``ref`` pixel."""
    rr, cc = np.nonzero(src)
    if rr.size == 0 or not ref.any():
        return 0
    # exact EDT; compare integer squared distances to avoid sqrt rounding
    near_r, near_c = distance_transform_edt(~ref, return_distances=False, return_indices=True)
    d2 = (rr - near_r[rr, cc]) ** 2 + (cc - near_c[rr, cc]) ** 2
    return int(np.count_nonzero(d2 <= tolerance * tolerance))


def boundary_precision_recall(pred_boundary, truth_boundary, cfg: BoundaryMatchConfig = BoundaryMatchConfig()) -> Tuple[float, float]:
    a, b = _pair_masks(pred_boundary, truth_boundary)
    n_a, n_b = int(a.sum()), int(b.sum())
    precision = _count_matched(a, b, cfg.tolerance) / n_a if n_a else 0.0
    recall = _count_matched(b, a, cfg.tolerance) / n_b if n_b else 0.0
    return precision, recall


def boundary_fmeasure(pred_boundary, truth_boundary, cfg: BoundaryMatchConfig = BoundaryMatchConfig()) -> float:
    """Harmonic mean of boundary precision and recall under a distance tolerance."""
    a, b = _pair_masks(pred_boundary, truth_boundary)
    if not a.any() and not b.any():
        return 1.0
    p, r = boundary_precision_recall(a, b, cfg)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def evaluate_patch(pred_mask, truth_mask, cfg: BoundaryMatchConfig = BoundaryMatchConfig(), ssim_on: str = "boundary") -> EvalReport:
    """All four scores for one patch.

    ``ssim_on="mask"`` computes SSIM on the masks instead of their boundaries.
    """
    pred, truth = _pair_masks(pred_mask, truth_mask)
    pb, tb = extract_boundary(pred), extract_boundary(truth)
    if ssim_on == "boundary":
        ssim = boundary_ssim(pb, tb)
    elif ssim_on == "mask":
        ssim = boundary_ssim(pred, truth)
    else:
        raise ConfigError(f"ssim_on must be 'boundary' or 'mask', got {ssim_on!r}")
    return EvalReport(
        f1=mask_f1(pred, truth),
        iou=mask_iou(pred, truth),
        ssim=ssim,
        boundary_f=boundary_fmeasure(pb, tb, cfg),
    )


def aggregate(reports: Iterable[EvalReport]) -> EvalReport:
    """Unweighted per-patch mean; a pre-aggregated report counts once per patch it covers."""
    reports = list(reports)
    if not reports:
        raise ConfigError("cannot aggregate an empty set of reports")
    n = sum(r.n_patches for r in reports)
    means = {
        f.name: sum(getattr(r, f.name) * r.n_patches for r in reports) / n
        for f in fields(EvalReport)
        if f.name != "n_patches"
    }
    return EvalReport(n_patches=n, **means)
