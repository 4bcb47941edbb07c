"""Text file formats: HMAP v1 grids, plain PGM masks, keypoint/polygon JSON,
report CSV/JSON and ``key = value`` config files.

Every writer formats reals with six decimals and goes through
:func:`atomic_write`, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FormatError, KeypolyError
from .heatmap import Keypoint, as_heatmap
from .metrics import EvalReport
from .polygonize import Polygon
from .raster import as_mask

PathLike = Union[str, os.PathLike]

REPORT_COLUMNS = ("method", "f1", "iou", "ssim", "boundary_f", "n_patches")


def atomic_write(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file") from exc


# -- HMAP v1 -----------------------------------------------------------------


def format_hmap(grid: np.ndarray, integer: bool = False) -> str:
    grid = np.asarray(grid)
    height, width = grid.shape
    fmt = "{:d}" if integer else "{:.6f}"
    lines = [f"HMAP {height} {width}"]
    for row in grid:
        lines.append(" ".join(fmt.format(int(v) if integer else float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_hmap(text: str, source: str = "<hmap>") -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{source}: empty HMAP file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "HMAP":
        raise FormatError(f"{source}: expected header 'HMAP <H> <W>', got {lines[0]!r}")
    try:
        height, width = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError(f"{source}: non-integer dimensions in header {lines[0]!r}") from None
    if height < 1 or width < 1:
        raise FormatError(f"{source}: dimensions must be >= 1, got {height}x{width}")
    if len(lines) - 1 != height:
        raise FormatError(f"{source}: header declares {height} rows, found {len(lines) - 1}")
    grid = np.empty((height, width), dtype=np.float64)
    for r, line in enumerate(lines[1:]):
        cells = line.split()
        if len(cells) != width:
            raise FormatError(f"{source}: row {r} has {len(cells)} values, expected {width}")
        try:
            grid[r] = [float(c) for c in cells]
        except ValueError:
            raise FormatError(f"{source}: row {r} contains a non-numeric value") from None
    return grid


def write_heatmap(path: PathLike, heatmap) -> None:
    atomic_write(path, format_hmap(as_heatmap(heatmap)))


def read_heatmap(path: PathLike) -> np.ndarray:
    grid = parse_hmap(_read_text(path), str(path))
    try:
        return as_heatmap(grid)
    except KeypolyError as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- PGM (P2, maxval 1) ------------------------------------------------------


def format_pgm(mask) -> str:
    m = as_mask(mask)
    height, width = m.shape
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in m)
    return f"P2\n{width} {height}\n1\n{rows}\n"


def parse_pgm(text: str, source: str = "<pgm>") -> np.ndarray:
    tokens: List[str] = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if len(tokens) < 4 or tokens[0] != "P2":
        raise FormatError(f"{source}: not a plain (P2) PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        values = [int(t) for t in tokens[4:]]
    except ValueError:
        raise FormatError(f"{source}: non-integer token in PGM data") from None
    if width < 1 or height < 1:
        raise FormatError(f"{source}: dimensions must be >= 1, got {width}x{height}")
    if maxval != 1:
        raise FormatError(f"{source}: mask PGM must have maxval 1, got {maxval}")
    if len(values) != width * height:
        raise FormatError(f"{source}: expected {width * height} pixels, found {len(values)}")
    grid = np.array(values, dtype=np.int64).reshape(height, width)
    if np.any((grid != 0) & (grid != 1)):
        raise FormatError(f"{source}: mask pixels must be 0 or 1")
    return grid.astype(np.uint8)


def write_mask(path: PathLike, mask) -> None:
    """Write a mask as PGM, or as an integer HMAP grid for ``.hmap`` paths."""
    if Path(path).suffix == ".hmap":
        atomic_write(path, format_hmap(as_mask(mask), integer=True))
    else:
        atomic_write(path, format_pgm(mask))


def read_mask(path: PathLike) -> np.ndarray:
    text = _read_text(path)
    if Path(path).suffix == ".hmap":
        grid = parse_hmap(text, str(path))
        if np.any((grid != 0) & (grid != 1)):
            raise FormatError(f"{path}: mask values must be 0 or 1")
        return grid.astype(np.uint8)
    return parse_pgm(text, str(path))


# -- JSON ----------------------------------------------------------------------


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_json(path: PathLike):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def keypoints_to_json(keypoints: Iterable[Keypoint]) -> list:
    return [{"row": k.row, "col": k.col, "score": round(k.score, 6)} for k in keypoints]


def write_keypoints(path: PathLike, keypoints: Iterable[Keypoint]) -> None:
    atomic_write(path, dump_json(keypoints_to_json(keypoints)))


def read_keypoints(path: PathLike) -> List[Keypoint]:
    data = _load_json(path)
    if not isinstance(data, list):
        raise FormatError(f"{path}: keypoint file must hold a JSON array")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not isinstance(item.get("row"), int) or not isinstance(item.get("col"), int):
            raise FormatError(f"{path}: entry {i} needs integer 'row' and 'col'")
        score = item.get("score", 1.0)
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise FormatError(f"{path}: entry {i} has a non-numeric score")
        try:
            out.append(Keypoint(item["row"], item["col"], score))
        except KeypolyError as exc:
            raise FormatError(f"{path}: entry {i}: {exc}") from None
    return out


def polygon_to_json(polygon: Polygon) -> dict:
    return {
        "vertices": [[round(x, 6), round(y, 6)] for x, y in polygon.vertices],
        "closed": True,
        "self_intersecting": polygon.self_intersecting,
    }


def write_polygon(path: PathLike, polygon: Polygon) -> None:
    atomic_write(path, dump_json(polygon_to_json(polygon)))


def read_polygon(path: PathLike) -> Polygon:
    data = _load_json(path)
    verts = data.get("vertices") if isinstance(data, dict) else None
    if not isinstance(verts, list):
        raise FormatError(f"{path}: polygon file needs a 'vertices' array")
    try:
        pts = [(float(x), float(y)) for x, y in verts]
        return Polygon(tuple(pts))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed vertices ({exc})") from None


# -- reports ---------------------------------------------------------------------


def _scores(report: EvalReport, percent: bool) -> List[str]:
    scale = 100.0 if percent else 1.0
    return [f"{getattr(report, k) * scale:.6f}" for k in REPORT_COLUMNS[1:-1]]


def format_report_csv(
    method: str,
    patches: Sequence[Tuple[str, EvalReport]],
    total: Optional[EvalReport],
    percent: bool = False,
    warnings: Sequence[str] = (),
) -> str:
    """Per-patch rows named ``<method>/<patch>``, then one aggregate row."""
    lines = [",".join(REPORT_COLUMNS)]
    for name, rep in patches:
        lines.append(",".join([f"{method}/{name}", *_scores(rep, percent), str(rep.n_patches)]))
    if total is not None:
        lines.append(",".join([method, *_scores(total, percent), str(total.n_patches)]))
    lines.extend(f"# warning: {w}" for w in warnings)
    return "\n".join(lines) + "\n"


def _report_dict(rep: EvalReport, percent: bool) -> dict:
    scale = 100.0 if percent else 1.0
    d = {k: round(getattr(rep, k) * scale, 6) for k in REPORT_COLUMNS[1:-1]}
    d["n_patches"] = rep.n_patches
    return d


def format_report_json(
    method: str,
    patches: Sequence[Tuple[str, EvalReport]],
    total: Optional[EvalReport],
    percent: bool = False,
    warnings: Sequence[str] = (),
) -> str:
    doc = {
        "method": method,
        "units": "percent" if percent else "fraction",
        "patches": [{"patch": name, **_report_dict(rep, percent)} for name, rep in patches],
        "aggregate": _report_dict(total, percent) if total is not None else None,
        "warnings": list(warnings),
    }
    return dump_json(doc)


def parse_report_csv(text: str) -> List[Dict[str, str]]:
    """Rows of a report CSV as dicts; warning comment lines are skipped."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


# -- config files --------------------------------------------------------------


def parse_config(text: str, source: str = "<config>") -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys normalize ``-`` to ``_``."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise FormatError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def read_config(path: PathLike) -> Dict[str, str]:
    return parse_config(_read_text(path), str(path))
