import math
from itertools import combinations

import numpy as np
import pytest

from keypoly.errors import ConfigError, GenerationError
from keypoly.heatmap import GaussianSpec, extract_peaks, render_gaussian_target
from keypoly.polygonize import group_keypoints
from keypoly.raster import rasterize
from keypoly.synth import SynthConfig, generate, generate_corpus


def test_same_seed_and_index_identical():
    cfg = SynthConfig(seed=11, noise_amplitude=0.03)
    a, b = generate(cfg, 5), generate(cfg, 5)
    assert a.polygon == b.polygon and a.keypoints == b.keypoints
    for name in ("truth_mask", "target_heatmap", "noisy_heatmap"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_different_index_differs():
    cfg = SynthConfig(seed=11)
    assert generate(cfg, 0).polygon != generate(cfg, 1).polygon
    assert generate(cfg, 0).polygon != generate(SynthConfig(seed=12), 0).polygon


def test_zero_noise_copies_target():
    s = generate(SynthConfig(seed=3), 0)
    assert np.array_equal(s.noisy_heatmap, s.target_heatmap)


def test_noise_bounded():
    s = generate(SynthConfig(seed=3, noise_amplitude=0.04), 0)
    diff = s.noisy_heatmap - s.target_heatmap
    assert np.abs(diff).max() <= 0.04 + 1e-12
    assert s.noisy_heatmap.min() >= 0 and s.noisy_heatmap.max() <= 1


def test_rectangle_corners_recovered():
    cfg = SynthConfig(seed=4, shape_kind="rectilinear", n_vertices=(4, 4))
    for i in range(10):
        s = generate(cfg, i)
        assert len(s.keypoints) == 4
        xs = sorted({x for x, _ in s.polygon.vertices})
        ys = sorted({y for _, y in s.polygon.vertices})
        assert len(xs) == 2 and len(ys) == 2
        corners = sorted((int(y), int(x)) for x in xs for y in ys)
        assert sorted(k.location for k in s.keypoints) == corners
        assert [k.location for k in extract_peaks(s.target_heatmap)] == corners


@pytest.mark.parametrize("kind,nv", [("convex", (5, 12)), ("convex", (3, 3)), ("rectilinear", (4, 8)), ("rectilinear", (6, 6))])
def test_sample_invariants(kind, nv):
    cfg = SynthConfig(seed=21, shape_kind=kind, n_vertices=nv, gaussian=GaussianSpec(2.0))
    for s in generate_corpus(cfg, 12):
        poly = s.polygon
        assert nv[0] <= len(poly) <= nv[1]
        assert not poly.self_intersecting and not poly.is_degenerate
        m = 3 * cfg.gaussian.sigma
        assert all(m <= x <= 127 - m and m <= y <= 127 - m for x, y in poly.vertices)
        expected = [(math.floor(y + 0.5), math.floor(x + 0.5)) for x, y in poly.vertices]
        assert [k.location for k in s.keypoints] == expected
        for a, b in combinations(expected, 2):
            assert math.dist(a, b) >= 4 * cfg.gaussian.sigma
        assert np.array_equal(s.truth_mask, rasterize(poly, cfg.dims))
        assert np.array_equal(s.target_heatmap, render_gaussian_target(s.keypoints, cfg.dims, cfg.gaussian))


def test_noisy_peaks_and_grouping():
    cfg = SynthConfig(seed=5, noise_amplitude=0.04)
    for s in generate_corpus(cfg, 25):
        peaks = extract_peaks(s.noisy_heatmap)
        for k in s.keypoints:
            assert any(abs(p.row - k.row) <= 1 and abs(p.col - k.col) <= 1 for p in peaks)
        polygon, _ = group_keypoints(peaks)
        assert not polygon.self_intersecting


def test_rectilinear_shapes_have_right_angles():
    cfg = SynthConfig(seed=8, shape_kind="rectilinear", n_vertices=(6, 8))
    for s in generate_corpus(cfg, 10):
        for (x0, y0), (x1, y1) in s.polygon.edges():
            assert x0 == x1 or y0 == y1


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(n_vertices=(2, 5))
    with pytest.raises(ConfigError):
        SynthConfig(n_vertices=(6, 5))
    with pytest.raises(ConfigError):
        SynthConfig(shape_kind="round")
    with pytest.raises(ConfigError):
        SynthConfig(noise_amplitude=0.5)
    with pytest.raises(ConfigError):
        SynthConfig(dims=(16, 16), gaussian=GaussianSpec(2.0))
    with pytest.raises(ConfigError):
        SynthConfig(seed=-1)


def test_infeasible_config_raises():
    with pytest.raises(GenerationError):
        generate(SynthConfig(dims=(40, 40), n_vertices=(30, 30)), 0)
    with pytest.raises(GenerationError):
        generate(SynthConfig(shape_kind="rectilinear", n_vertices=(5, 5)), 0)
