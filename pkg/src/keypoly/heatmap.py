"""Keypoint heatmaps: Gaussian targets, the penalty-reduced focal loss and peak
extraction.

Heatmaps are plain 2-D ``float64`` numpy arrays with values in ``[0, 1]``;
``as_heatmap`` enforces that contract at module boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .errors import BoundsError, ConfigError, GridValueError, ShapeError

__all__ = [
    "Keypoint",
    "GaussianSpec",
    "FocalLossConfig",
    "PeakConfig",
    "as_heatmap",
    "as_keypoint",
    "render_gaussian_target",
    "focal_loss",
    "focal_loss_gradient",
    "extract_peaks",
]


@dataclass(frozen=True, order=True)
class Keypoint:
    """Integer grid location with a confidence score.

    Ordering is by ``(row, col)`` first, which is the output order of
    :func:`extract_peaks`.
    """

    row: int
    col: int
    score: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if int(self.row) != self.row or int(self.col) != self.col:
            raise ConfigError(f"keypoint coordinates must be integers, got ({self.row}, {self.col})")
        object.__setattr__(self, "row", int(self.row))
        object.__setattr__(self, "col", int(self.col))
        object.__setattr__(self, "score", float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise ConfigError(f"keypoint score {self.score} outside [0, 1]")

    @property
    def location(self) -> Tuple[int, int]:
        return (self.row, self.col)


KeypointLike = Union[Keypoint, Tuple[int, int], Tuple[int, int, float]]


def as_keypoint(kp: KeypointLike) -> Keypoint:
    """Accept a :class:`Keypoint` or a ``(row, col[, score])`` tuple."""
    if isinstance(kp, Keypoint):
        return kp
    return Keypoint(*kp)


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian kernel used to render targets.

    ``truncation_radius`` defaults to ``ceil(3 * sigma)``; kernel values at a
    Euclidean distance beyond it are zero.
    """

    sigma: float = 2.0
    truncation_radius: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.truncation_radius is None:
            object.__setattr__(self, "truncation_radius", float(math.ceil(3 * self.sigma)))
        if not self.truncation_radius >= 1:
            raise ConfigError(f"truncation_radius must be >= 1, got {self.truncation_radius}")


@dataclass(frozen=True)
class FocalLossConfig:
    alpha: float = 2.0
    beta: float = 4.0
    n_objects: int = 1
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be >= 0")
        if self.n_objects < 1:
            raise ConfigError(f"n_objects must be >= 1, got {self.n_objects}")
        if not 0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")


@dataclass(frozen=True)
class PeakConfig:
    """Threshold and local-maximum window for :func:`extract_peaks`."""

    threshold: float = 0.1
    window: int = 3

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.window < 3 or self.window % 2 != 1:
            raise ConfigError(f"window must be odd and >= 3, got {self.window}")


def as_heatmap(values) -> np.ndarray:
    """Validate ``values`` as a heatmap and return it as a float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"heatmap must be a non-empty 2-D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise GridValueError("heatmap values must lie in [0, 1]")
    return arr


def render_gaussian_target(
    keypoints: Iterable[KeypointLike],
    dims: Tuple[int, int],
    spec: GaussianSpec = GaussianSpec(),
) -> np.ndarray:
    """Render the Gaussian target heatmap for a set of keypoints.

    Each keypoint contributes ``exp(-d^2 / (2 sigma^2))`` within the truncation
    radius; overlapping kernels are combined with an element-wise maximum, so
    every keypoint pixel is exactly 1.0.

    Raises:
        BoundsError: if a keypoint lies outside ``dims``.
    """
    height, width = (int(d) for d in dims)
    if height < 1 or width < 1:
        raise ShapeError(f"dims must be >= 1x1, got {dims}")
    heat = np.zeros((height, width), dtype=np.float64)
    two_var = 2.0 * spec.sigma * spec.sigma
    radius = spec.truncation_radius
    reach = int(math.floor(radius))
    for kp in map(as_keypoint, keypoints):
        if not (0 <= kp.row < height and 0 <= kp.col < width):
            raise BoundsError(f"keypoint (row={kp.row}, col={kp.col}) outside {height}x{width} grid")
        r0, r1 = max(0, kp.row - reach), min(height, kp.row + reach + 1)
        c0, c1 = max(0, kp.col - reach), min(width, kp.col + reach + 1)
        rr, cc = np.ogrid[r0:r1, c0:c1]
        d2 = (rr - kp.row) ** 2 + (cc - kp.col) ** 2
        kernel = np.exp(-d2 / two_var)
        kernel[d2 > radius * radius] = 0.0
        np.maximum(heat[r0:r1, c0:c1], kernel, out=heat[r0:r1, c0:c1])
    return heat


def _loss_operands(prediction, target) -> Tuple[np.ndarray, np.ndarray]:
    p = as_heatmap(prediction)
    g = as_heatmap(target)
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {g.shape}")
    return p, g


def focal_loss(prediction, target, cfg: FocalLossConfig = FocalLossConfig()) -> float:
    """Penalty-reduced pixelwise focal loss of ``prediction`` against a Gaussian
    ``target``.

    Pixels with ``target == 1`` are positives; all others are negatives whose
    penalty is scaled by ``(1 - target) ** beta``. Only the logarithm arguments
    are clamped to ``[epsilon, 1 - epsilon]``, so a perfect prediction scores
    exactly zero.
    """
    p, g = _loss_operands(prediction, target)
    eps = cfg.epsilon
    pc = np.clip(p, eps, 1.0 - eps)
    positive = g == 1.0
    pos_terms = (1.0 - p) ** cfg.alpha * np.log(pc)
    neg_terms = (1.0 - g) ** cfg.beta * p**cfg.alpha * np.log(1.0 - pc)
    total = np.where(positive, pos_terms, neg_terms).sum()
    # + 0.0 folds a negative zero into 0.0
    return float(-total / cfg.n_objects) + 0.0


def focal_loss_gradient(prediction, target, cfg: FocalLossConfig = FocalLossConfig()) -> np.ndarray:
    """Analytic derivative of :func:`focal_loss` with respect to every prediction
    pixel. Pixels whose prediction falls outside ``[epsilon, 1 - epsilon]`` get a
    zero gradient.
    """
    p, g = _loss_operands(prediction, target)
    eps, a = cfg.epsilon, cfg.alpha
    free = (p >= eps) & (p <= 1.0 - eps)
    # evaluate on clamped values so clamped pixels stay finite before masking
    pc = np.clip(p, eps, 1.0 - eps)
    q = 1.0 - pc
    if a == 0:
        d_pos = 1.0 / pc
        d_neg = (1.0 - g) ** cfg.beta * (-1.0 / q)
    else:
        d_pos = -a * q ** (a - 1.0) * np.log(pc) + q**a / pc
        d_neg = (1.0 - g) ** cfg.beta * (a * pc ** (a - 1.0) * np.log(q) - pc**a / q)
    grad = -np.where(g == 1.0, d_pos, d_neg) / cfg.n_objects
    grad[~free] = 0.0
    return grad + 0.0


def extract_peaks(heatmap, cfg: PeakConfig = PeakConfig()) -> list[Keypoint]:
    """Return the local maxima of ``heatmap`` whose value exceeds the threshold.

    A pixel is a peak when it is strictly greater than every other pixel in the
    centered ``window x window`` neighbourhood (cells outside the grid count as
    ``-inf``). On a plateau, the pixel that comes first in ``(row, col)`` order
    within the window wins. Output is sorted by ``(row, col)``.
    """
    v = as_heatmap(heatmap)
    half = cfg.window // 2
    height, width = v.shape
    padded = np.pad(v, half, mode="constant", constant_values=-np.inf)
    keep = v > cfg.threshold
    for dr in range(-half, half + 1):
        for dc in range(-half, half + 1):
            if dr == 0 and dc == 0:
                continue
            nb = padded[half + dr : half + dr + height, half + dc : half + dc + width]
            if (dr, dc) > (0, 0):
                keep &= nb <= v
            else:
                keep &= nb < v
    rows, cols = np.nonzero(keep)
    return [Keypoint(int(r), int(c), float(v[r, c])) for r, c in zip(rows, cols)]


def keypoint_locations(keypoints: Sequence[KeypointLike]) -> list[Tuple[int, int]]:
    return [as_keypoint(k).location for k in keypoints]
