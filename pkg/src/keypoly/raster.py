"""Polygon rasterization and mask boundary extraction.

A pixel ``(r, c)`` belongs to a polygon when its center ``(c + 0.5, r + 0.5)``
is inside under the even-odd rule or lies exactly on an edge. Crossings are
computed with :class:`fractions.Fraction`, so the result is exact for any
float vertex coordinates.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from typing import Tuple

import numpy as np

from .errors import DegeneratePolygonWarning, GridValueError, ShapeError
from .polygonize import Polygon

__all__ = ["as_mask", "rasterize", "extract_boundary"]


def as_mask(values) -> np.ndarray:
    """Validate ``values`` as a binary mask and return it as ``uint8``."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"mask must be a non-empty 2-D grid, got shape {arr.shape}")
    if arr.dtype != bool and not np.all((arr == 0) | (arr == 1)):
        raise GridValueError("mask values must be 0 or 1")
    return arr.astype(np.uint8)


def _fill(row: np.ndarray, lo: Fraction, hi: Fraction) -> None:
    # columns whose center c + 1/2 lies in [lo, hi]
    c0 = max(math.ceil(lo - Fraction(1, 2)), 0)
    c1 = min(math.floor(hi - Fraction(1, 2)), row.shape[0] - 1)
    if c0 <= c1:
        row[c0 : c1 + 1] = 1


def rasterize(polygon: Polygon, dims: Tuple[int, int]) -> np.ndarray:
    """Scanline even-odd fill of ``polygon`` onto an ``H x W`` grid.

    Zero-area polygons produce an all-zero mask and a
    :class:`DegeneratePolygonWarning`.
    """
    height, width = (int(d) for d in dims)
    if height < 1 or width < 1:
        raise ShapeError(f"dims must be >= 1x1, got {dims}")
    mask = np.zeros((height, width), dtype=np.uint8)
    if polygon.is_degenerate:
        warnings.warn(f"degenerate polygon with {len(polygon)} vertices encloses no area", DegeneratePolygonWarning, stacklevel=2)
        return mask

    verts = [(Fraction(x), Fraction(y)) for x, y in polygon.vertices]
    n = len(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    sloped = [(x0, y0, y1, (x1 - x0) / (y1 - y0)) for (x0, y0), (x1, y1) in edges if y0 != y1]
    flat = [(min(x0, x1), max(x0, x1), y0) for (x0, y0), (x1, y1) in edges if y0 == y1]

    ys = [y for _, y in verts]
    r_lo = max(math.ceil(min(ys) - Fraction(1, 2)), 0)
    r_hi = min(math.floor(max(ys) - Fraction(1, 2)), height - 1)
    for r in range(r_lo, r_hi + 1):
        y = Fraction(2 * r + 1, 2)
        row = mask[r]
        xs = sorted(x0 + (y - y0) * slope for x0, y0, y1, slope in sloped if (y0 <= y < y1) or (y1 <= y < y0))
        for lo, hi in zip(xs[0::2], xs[1::2]):
            _fill(row, lo, hi)
        # boundary points the half-open crossing rule can skip
        for lo, hi, fy in flat:
            if fy == y:
                _fill(row, lo, hi)
        for vx, vy in verts:
            if vy == y:
                _fill(row, vx, vx)
    return mask


def extract_boundary(mask) -> np.ndarray:
    """Inner boundary: mask pixels with a 4-neighbour that is 0 or off-grid."""
    m = as_mask(mask).astype(bool)
    p = np.pad(m, 1, mode="constant", constant_values=False)
    interior = m & p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return (m & ~interior).astype(np.uint8)
