"""Keypoint-based building polygonization: Gaussian keypoint targets, focal
loss, peak extraction, geometric grouping, rasterization and segmentation
metrics."""

from .errors import (
    BoundsError,
    ConfigError,
    DegeneratePolygonWarning,
    DuplicatePointError,
    EmptyInputError,
    FormatError,
    GenerationError,
    GridValueError,
    InsufficientPointsError,
    KeypolyError,
    ShapeError,
)
from .heatmap import (
    FocalLossConfig,
    GaussianSpec,
    Keypoint,
    PeakConfig,
    extract_peaks,
    focal_loss,
    focal_loss_gradient,
    render_gaussian_target,
)
from .metrics import (
    BoundaryMatchConfig,
    EvalReport,
    aggregate,
    boundary_fmeasure,
    boundary_ssim,
    evaluate_patch,
    mask_f1,
    mask_iou,
)
from .polygonize import GroupingTrace, Polygon, group_keypoints, select_start
from .raster import extract_boundary, rasterize
from .synth import SynthConfig, SynthSample, generate

__version__ = "0.1.0"
