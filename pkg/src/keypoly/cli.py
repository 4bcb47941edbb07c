"""Command-line interface.

Settings resolve in three layers: built-in defaults, then a ``key = value``
file given with ``--config``, then explicit flags. Exit codes: 0 success,
2 input or configuration error, 3 pipeline degeneracy (too few keypoints or a
zero-area polygon).

The heatmap source is a file, a directory of files, or the synthetic
generator. A trained keypoint network would plug in here by writing HMAP
files.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .errors import DegeneratePolygonWarning, InsufficientPointsError, KeypolyError
from .heatmap import FocalLossConfig, GaussianSpec, PeakConfig, extract_peaks, focal_loss, render_gaussian_target
from .metrics import BoundaryMatchConfig, EvalReport, aggregate, evaluate_patch
from .polygonize import group_keypoints
from .raster import extract_boundary, rasterize
from .synth import SynthConfig, generate

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3

MASK_SUFFIXES = (".pgm", ".hmap")

# name -> (parser, default); a None default means "derive from other settings"
SETTINGS = {
    "tau": (float, 0.1),
    "window": (int, 3),
    "sigma": (float, 2.0),
    "radius": (float, None),
    "alpha": (float, 2.0),
    "beta": (float, 4.0),
    "n_objects": (int, 1),
    "boundary_tolerance": (float, 2.0),
    "report_format": (str, "csv"),
    "seed": (int, 0),
    "ssim_on": (str, "boundary"),
    "method": (str, "keypoly"),
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class PipelineConfig:
    peak: PeakConfig = field(default_factory=PeakConfig)
    gaussian: GaussianSpec = field(default_factory=GaussianSpec)
    boundary_match: BoundaryMatchConfig = field(default_factory=BoundaryMatchConfig)
    focal: FocalLossConfig = field(default_factory=FocalLossConfig)
    output_dir: Optional[Path] = None
    report_format: str = "csv"
    seed: int = 0
    ssim_on: str = "boundary"
    method: str = "keypoly"


def resolve_settings(args: argparse.Namespace) -> Dict[str, object]:
    values: Dict[str, object] = {k: default for k, (_, default) in SETTINGS.items()}
    if getattr(args, "config", None):
        for key, raw in io.read_config(args.config).items():
            if key not in SETTINGS:
                raise CliError(f"{args.config}: unknown setting {key!r}")
            try:
                values[key] = SETTINGS[key][0](raw)
            except ValueError:
                raise CliError(f"{args.config}: bad value {raw!r} for {key}") from None
    for key in SETTINGS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def build_config(args: argparse.Namespace) -> PipelineConfig:
    s = resolve_settings(args)
    if s["report_format"] not in ("csv", "json"):
        raise CliError(f"report format must be csv or json, got {s['report_format']!r}")
    if s["ssim_on"] not in ("boundary", "mask"):
        raise CliError(f"ssim operand must be boundary or mask, got {s['ssim_on']!r}")
    return PipelineConfig(
        peak=PeakConfig(s["tau"], s["window"]),
        gaussian=GaussianSpec(s["sigma"], s["radius"]),
        boundary_match=BoundaryMatchConfig(s["boundary_tolerance"]),
        focal=FocalLossConfig(s["alpha"], s["beta"], s["n_objects"]),
        output_dir=Path(args.output) if getattr(args, "output", None) else None,
        report_format=s["report_format"],
        seed=s["seed"],
        ssim_on=s["ssim_on"],
        method=s["method"],
    )


def _write_report(path: Path, cfg: PipelineConfig, rows, total, percent: bool, warns: Sequence[str] = ()) -> None:
    fmt = io.format_report_json if cfg.report_format == "json" else io.format_report_csv
    io.atomic_write(path, fmt(cfg.method, rows, total, percent=percent, warnings=warns))


# -- subcommands -----------------------------------------------------------------


def cmd_render_target(args, cfg: PipelineConfig) -> int:
    keypoints = io.read_keypoints(args.keypoints)
    heat = render_gaussian_target(keypoints, tuple(args.dims), cfg.gaussian)
    io.write_heatmap(args.output, heat)
    return EXIT_OK


def cmd_detect_peaks(args, cfg: PipelineConfig) -> int:
    peaks = extract_peaks(io.read_heatmap(args.heatmap), cfg.peak)
    io.write_keypoints(args.output, peaks)
    print(f"{len(peaks)} peaks")
    return EXIT_OK


def cmd_polygonize(args, cfg: PipelineConfig) -> int:
    keypoints = io.read_keypoints(args.keypoints)
    try:
        polygon, trace = group_keypoints(keypoints)
    except InsufficientPointsError as exc:
        raise CliError(f"insufficient keypoints: {exc}", EXIT_DEGENERATE) from None
    io.write_polygon(args.output, polygon)
    print(f"{len(polygon)} vertices, start {trace.start_vertex}, {trace.tie_events} ties"
          + (", self-intersecting" if polygon.self_intersecting else ""))
    return EXIT_OK


def cmd_rasterize(args, cfg: PipelineConfig) -> int:
    polygon = io.read_polygon(args.polygon)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegeneratePolygonWarning)
        mask = rasterize(polygon, tuple(args.dims))
    io.write_mask(args.output, mask)
    if args.boundary:
        io.write_mask(args.boundary, extract_boundary(mask))
    if caught:
        print(f"warning: {caught[0].message}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _evaluate_pair(pred_path: Path, truth_path: Path, cfg: PipelineConfig) -> EvalReport:
    return evaluate_patch(io.read_mask(pred_path), io.read_mask(truth_path), cfg.boundary_match, cfg.ssim_on)


def _list_masks(directory: Path) -> Dict[str, Path]:
    if not directory.is_dir():
        raise CliError(f"{directory}: not a directory")
    return {p.name: p for p in sorted(directory.iterdir()) if p.is_file() and p.suffix in MASK_SUFFIXES}


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    preds = _list_masks(Path(args.pred_dir))
    truths = _list_masks(Path(args.truth_dir))
    if not preds and not truths:
        raise CliError("no patches found")
    names = sorted(set(preds) & set(truths))
    warns = [f"unmatched {name} in {'prediction' if name in preds else 'truth'} directory"
             for name in sorted(set(preds) ^ set(truths))]
    if not names:
        raise CliError("no patches found with matching filenames")
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(_evaluate_pair, [preds[n] for n in names], [truths[n] for n in names], [cfg] * len(names)))
    else:
        reports = [_evaluate_pair(preds[n], truths[n], cfg) for n in names]
    rows = list(zip((Path(n).stem for n in names), reports))
    total = aggregate(reports)
    _write_report(Path(args.output), cfg, rows, total, args.percent, warns)
    if args.figures:
        from .plotting import plot_report

        plot_report(cfg.method, rows, total, Path(args.output).with_suffix(".png"))
    for w in warns:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(rows)} patches evaluated, {len(warns)} warnings")
    return EXIT_OK


@dataclass
class _Patch:
    name: str
    heatmap: np.ndarray
    truth: Optional[np.ndarray] = None
    target: Optional[np.ndarray] = None


def _pipeline_sources(args, cfg: PipelineConfig) -> List[_Patch]:
    if args.synthetic:
        scfg = SynthConfig(
            seed=cfg.seed,
            dims=tuple(args.dims),
            n_vertices=tuple(args.vertices),
            shape_kind=args.shape,
            noise_amplitude=args.noise,
            gaussian=cfg.gaussian,
        )
        out = []
        for i in range(args.index, args.index + args.count):
            s = generate(scfg, i)
            out.append(_Patch(f"{i:04d}", s.noisy_heatmap, s.truth_mask, s.target_heatmap))
        return out
    if args.input is None:
        raise CliError("pipeline needs a heatmap file, a directory, or --synthetic")
    src = Path(args.input)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix == ".hmap")
        if not files:
            raise CliError(f"{src}: no .hmap files found")
    else:
        files = [src]
    truth_src = Path(args.truth) if args.truth else None
    patches = []
    for f in files:
        truth = None
        if truth_src is not None:
            if truth_src.is_dir():
                match = [truth_src / (f.stem + sfx) for sfx in MASK_SUFFIXES if (truth_src / (f.stem + sfx)).is_file()]
                if not match:
                    raise CliError(f"no truth mask for {f.name} in {truth_src}")
                truth = io.read_mask(match[0])
            else:
                truth = io.read_mask(truth_src)
        patches.append(_Patch(f.stem, io.read_heatmap(f), truth))
    return patches


def _check_count(args) -> None:
    if args.count < 1 or args.index < 0:
        raise CliError("--count must be >= 1 and --index >= 0")


def cmd_pipeline(args, cfg: PipelineConfig) -> int:
    if cfg.output_dir is None:
        raise CliError("pipeline needs --output DIR")
    _check_count(args)
    patches = _pipeline_sources(args, cfg)
    single = len(patches) == 1 and not args.synthetic
    out = cfg.output_dir
    rows: List[Tuple[str, EvalReport]] = []
    degenerate: List[str] = []
    losses = []
    for patch in patches:
        peaks = extract_peaks(patch.heatmap, cfg.peak)
        try:
            polygon, _ = group_keypoints(peaks)
        except InsufficientPointsError:
            if single:
                raise CliError(f"insufficient keypoints: {len(peaks)} peaks above tau={cfg.peak.threshold}", EXIT_DEGENERATE) from None
            polygon = None
        if polygon is None:
            mask = np.zeros(patch.heatmap.shape, dtype=np.uint8)
            degenerate.append(f"{patch.name}: insufficient keypoints ({len(peaks)})")
        else:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegeneratePolygonWarning)
                mask = rasterize(polygon, patch.heatmap.shape)
            if caught:
                degenerate.append(f"{patch.name}: degenerate polygon")
            io.write_polygon(out / "polygons" / f"{patch.name}.json", polygon)
        io.write_keypoints(out / "keypoints" / f"{patch.name}.json", peaks)
        io.write_mask(out / "masks" / f"{patch.name}.pgm", mask)
        if patch.target is not None:
            losses.append(focal_loss(patch.heatmap, patch.target, cfg.focal))
        if patch.truth is not None:
            rows.append((patch.name, evaluate_patch(mask, patch.truth, cfg.boundary_match, cfg.ssim_on)))
        if args.figures:
            from .plotting import plot_pipeline

            plot_pipeline(patch.heatmap, peaks, polygon, mask, out / "figures" / f"{patch.name}.png", patch.truth)
    if rows:
        total = aggregate(r for _, r in rows)
        report = out / f"report.{cfg.report_format}"
        _write_report(report, cfg, rows, total, args.percent, degenerate)
        if args.figures:
            from .plotting import plot_report

            plot_report(cfg.method, rows, total, report.with_suffix(".png"))
    summary = f"{len(patches)} patches, {len(degenerate)} degenerate"
    if losses:
        summary += f", mean focal loss vs target {sum(losses) / len(losses):.6f}"
    print(summary)
    for d in degenerate:
        print(f"warning: {d}", file=sys.stderr)
    return EXIT_DEGENERATE if degenerate else EXIT_OK


def _synth_one(scfg: SynthConfig, index: int, out: Path) -> dict:
    s = generate(scfg, index)
    name = f"{index:04d}"
    entry = {
        "index": index,
        "target": f"targets/{name}.hmap",
        "heatmap": f"heatmaps/{name}.hmap",
        "truth": f"truth/{name}.pgm",
        "keypoints": f"keypoints/{name}.json",
        "polygon": f"polygons/{name}.json",
    }
    io.write_heatmap(out / entry["target"], s.target_heatmap)
    io.write_heatmap(out / entry["heatmap"], s.noisy_heatmap)
    io.write_mask(out / entry["truth"], s.truth_mask)
    io.write_keypoints(out / entry["keypoints"], s.keypoints)
    io.write_polygon(out / entry["polygon"], s.polygon)
    return entry


def cmd_synth(args, cfg: PipelineConfig) -> int:
    if cfg.output_dir is None:
        raise CliError("synth needs --output DIR")
    _check_count(args)
    scfg = SynthConfig(
        seed=cfg.seed,
        dims=tuple(args.dims),
        n_vertices=tuple(args.vertices),
        shape_kind=args.shape,
        noise_amplitude=args.noise,
        gaussian=cfg.gaussian,
    )
    out = cfg.output_dir
    indices = range(args.index, args.index + args.count)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            entries = list(pool.map(_synth_one, [scfg] * len(indices), indices, [out] * len(indices)))
    else:
        entries = [_synth_one(scfg, i, out) for i in indices]
    manifest = {
        "generator": "PCG64 via SeedSequence([seed, index])",
        "seed": scfg.seed,
        "dims": list(scfg.dims),
        "n_vertices": list(scfg.n_vertices),
        "shape_kind": scfg.shape_kind,
        "noise_amplitude": scfg.noise_amplitude,
        "sigma": scfg.gaussian.sigma,
        "truncation_radius": scfg.gaussian.truncation_radius,
        "samples": entries,
    }
    io.atomic_write(out / "manifest.json", io.dump_json(manifest))
    print(f"{len(entries)} samples written to {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared settings (override --config)")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--tau", type=float, help="peak threshold (default 0.1)")
    g.add_argument("--window", type=int, help="peak window side, odd (default 3)")
    g.add_argument("--sigma", type=float, help="Gaussian sigma in px (default 2.0)")
    g.add_argument("--radius", type=float, help="kernel truncation radius (default ceil(3 sigma))")
    g.add_argument("--alpha", type=float, help="focal loss alpha (default 2)")
    g.add_argument("--beta", type=float, help="focal loss beta (default 4)")
    g.add_argument("--boundary-tolerance", type=float, help="boundary match distance in px (default 2)")
    g.add_argument("--report-format", choices=("csv", "json"), help="report format (default csv)")
    g.add_argument("--seed", type=int, help="synthetic corpus seed (default 0)")
    g.add_argument("--method", help="method name in reports (default keypoly)")
    g.add_argument("--ssim-on", choices=("boundary", "mask"), help="SSIM operand (default boundary)")
    return p


def _add_synth_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"), default=[128, 128])
    p.add_argument("--vertices", type=int, nargs=2, metavar=("MIN", "MAX"), default=[5, 12])
    p.add_argument("--shape", choices=("convex", "rectilinear"), default="convex")
    p.add_argument("--noise", type=float, default=0.0, help="uniform noise amplitude added to targets")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--index", type=int, default=0, help="first sample index")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="keypoly", description="Keypoint heatmaps to building polygons, masks and scores.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render-target", parents=[common], help="render a Gaussian target heatmap")
    p.add_argument("keypoints", help="keypoint JSON file")
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"), required=True)
    p.add_argument("-o", "--output", required=True, help="HMAP output file")
    p.set_defaults(func=cmd_render_target)

    p = sub.add_parser("detect-peaks", parents=[common], help="extract peaks from a heatmap")
    p.add_argument("heatmap")
    p.add_argument("-o", "--output", required=True, help="keypoint JSON output file")
    p.set_defaults(func=cmd_detect_peaks)

    p = sub.add_parser("polygonize", parents=[common], help="group keypoints into a polygon")
    p.add_argument("keypoints")
    p.add_argument("-o", "--output", required=True, help="polygon JSON output file")
    p.set_defaults(func=cmd_polygonize)

    p = sub.add_parser("rasterize", parents=[common], help="rasterize a polygon to a mask")
    p.add_argument("polygon")
    p.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"), required=True)
    p.add_argument("-o", "--output", required=True, help="mask output (.pgm or .hmap)")
    p.add_argument("--boundary", help="also write the mask boundary here")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("evaluate", parents=[common], help="score predicted masks against truth masks")
    p.add_argument("pred_dir")
    p.add_argument("truth_dir")
    p.add_argument("-o", "--output", required=True, help="report file")
    p.add_argument("--percent", action="store_true", help="report scores as percentages")
    p.add_argument("--figures", action="store_true", help="render a score chart next to the report")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="peaks -> polygon -> mask (-> report)")
    p.add_argument("input", nargs="?", help="HMAP file or directory of HMAP files")
    p.add_argument("--synthetic", action="store_true", help="take heatmaps from the synthetic generator")
    p.add_argument("--truth", help="truth mask file, or directory of masks named like the heatmaps")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--percent", action="store_true")
    p.add_argument("--figures", action="store_true", help="render per-patch and report figures")
    _add_synth_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    p.add_argument("--jobs", type=int, default=1)
    _add_synth_args(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"keypoly: error: {exc}", file=sys.stderr)
        return exc.code
    except (KeypolyError, OSError) as exc:
        print(f"keypoly: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
