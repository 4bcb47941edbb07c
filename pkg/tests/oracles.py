"""Slow, direct reference implementations used only to check the library."""

import math
from fractions import Fraction

import numpy as np


def gaussian_value(r, c, keypoints, sigma, radius):
    best = 0.0
    for kr, kc in keypoints:
        d2 = (r - kr) ** 2 + (c - kc) ** 2
        if d2 <= radius * radius:
            best = max(best, math.exp(-d2 / (2 * sigma * sigma)))
    return best


def focal_term(p, g, alpha=2.0, beta=4.0, eps=1e-7):
    """One pixel's contribution to the loss sum (before the -1/N factor)."""
    pc = min(max(p, eps), 1 - eps)
    if g == 1.0:
        return (1 - p) ** alpha * math.log(pc)
    return (1 - g) ** beta * p**alpha * math.log(1 - pc)


def brute_force_peaks(grid, tau, window):
    """Scan every pixel against every cell of its window."""
    h = window // 2
    H, W = len(grid), len(grid[0])
    out = []
    for r in range(H):
        for c in range(W):
            v = grid[r][c]
            if not v > tau:
                continue
            ok = True
            for rr in range(r - h, r + h + 1):
                for cc in range(c - h, c + h + 1):
                    if (rr, cc) == (r, c) or not (0 <= rr < H and 0 <= cc < W):
                        continue
                    q = grid[rr][cc]
                    if q > v or (q == v and (rr, cc) < (r, c)):
                        ok = False
            if ok:
                out.append((r, c, v))
    return out


def point_in_polygon(x, y, vertices):
    """Closed even-odd membership with exact rational arithmetic."""
    x, y = Fraction(x), Fraction(y)
    vs = [(Fraction(a), Fraction(b)) for a, b in vertices]
    n = len(vs)
    inside = False
    for i in range(n):
        (x0, y0), (x1, y1) = vs[i], vs[(i + 1) % n]
        cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        if cross == 0 and min(x0, x1) <= x <= max(x0, x1) and min(y0, y1) <= y <= max(y0, y1):
            return True
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xi:
                inside = not inside
    return inside


def brute_force_raster(vertices, dims):
    H, W = dims
    return np.array(
        [[1 if point_in_polygon(c + Fraction(1, 2), r + Fraction(1, 2), vertices) else 0 for c in range(W)] for r in range(H)],
        dtype=np.uint8,
    )


def boundary_by_scan(mask):
    m = np.asarray(mask)
    H, W = m.shape
    out = np.zeros_like(m, dtype=np.uint8)
    for r in range(H):
        for c in range(W):
            if not m[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < H and 0 <= cc < W) or not m[rr, cc]:
                    out[r, c] = 1
    return out


def pixel_counts(pred, truth):
    tp = fp = fn = 0
    for a, b in zip(np.asarray(pred).ravel().tolist(), np.asarray(truth).ravel().tolist()):
        if a and b:
            tp += 1
        elif a:
            fp += 1
        elif b:
            fn += 1
    return tp, fp, fn


def f1_by_count(pred, truth):
    tp, fp, fn = pixel_counts(pred, truth)
    return 1.0 if tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


def iou_by_count(pred, truth):
    tp, fp, fn = pixel_counts(pred, truth)
    return 1.0 if tp + fp + fn == 0 else tp / (tp + fp + fn)


def boundary_f_all_pairs(pred, truth, tol):
    a = list(zip(*np.nonzero(pred)))
    b = list(zip(*np.nonzero(truth)))
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0

    def matched(src, ref):
        return sum(1 for r, c in src if min((r - rr) ** 2 + (c - cc) ** 2 for rr, cc in ref) <= tol * tol)

    p = matched(a, b) / len(a)
    rc = matched(b, a) / len(b)
    return 0.0 if p + rc == 0 else 2 * p * rc / (p + rc)


def ssim_constant_windows(x, y, k1=0.01, k2=0.03, L=1.0):
    """SSIM of two constant windows (zero variance, zero covariance)."""
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    return ((2 * x * y + c1) * c2) / ((x * x + y * y + c1) * c2)


def convex_hull(points):
    """Monotone-chain hull, counter-clockwise, no collinear points."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def same_cycle(a, b):
    """``a`` equals ``b`` up to rotation or reversal."""
    if len(a) != len(b) or set(a) != set(b):
        return False
    n = len(a)
    for seq in (b, b[::-1]):
        k = seq.index(a[0])
        if all(a[i] == seq[(k + i) % n] for i in range(n)):
            return True
    return False


def ssim_direct(x, y, size=11, sigma=1.5, k1=0.01, k2=0.03, L=1.0):
    """Mean SSIM by explicit loops over window positions with a 2-D window."""
    ax = np.arange(size) - (size - 1) / 2
    w = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma**2))
    w /= w.sum()
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    H, W = x.shape
    vals = []
    for r in range(H - size + 1):
        for c in range(W - size + 1):
            a = x[r : r + size, c : c + size]
            b = y[r : r + size, c : c + size]
            ma, mb = (w * a).sum(), (w * b).sum()
            va = (w * (a - ma) ** 2).sum()
            vb = (w * (b - mb) ** 2).sum()
            cov = (w * (a - ma) * (b - mb)).sum()
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))
