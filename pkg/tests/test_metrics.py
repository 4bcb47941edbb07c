import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keypoly.errors import ConfigError, ShapeError
from keypoly.metrics import (
    BoundaryMatchConfig,
    EvalReport,
    aggregate,
    boundary_fmeasure,
    boundary_ssim,
    evaluate_patch,
    mask_f1,
    mask_iou,
)
from keypoly.raster import extract_boundary

from .oracles import boundary_f_all_pairs, f1_by_count, iou_by_count, ssim_constant_windows, ssim_direct


def block(shape, r, c, h=2, w=2):
    m = np.zeros(shape, dtype=np.uint8)
    m[r : r + h, c : c + w] = 1
    return m


def test_f1_iou_identical_and_disjoint():
    a = block((4, 4), 0, 0)
    assert mask_f1(a, a) == 1.0 and mask_iou(a, a) == 1.0
    b = block((4, 4), 2, 2)
    assert mask_f1(a, b) == 0.0 and mask_iou(a, b) == 0.0


def test_offset_blocks():
    a, b = block((4, 4), 0, 0), block((4, 4), 1, 1)
    assert mask_f1(a, b) == 0.25
    assert mask_iou(a, b) == pytest.approx(1 / 7, abs=1e-15)
    assert (f1_by_count(a, b), iou_by_count(a, b)) == (0.25, 1 / 7)


def test_empty_masks_score_one():
    z = np.zeros((5, 5), dtype=np.uint8)
    assert mask_f1(z, z) == 1.0 and mask_iou(z, z) == 1.0
    assert boundary_fmeasure(z, z) == 1.0


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        mask_iou(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(ShapeError):
        boundary_ssim(np.zeros((12, 12)), np.zeros((12, 13)))


def test_ssim_identical_is_one(rng):
    b = (rng.random((20, 24)) < 0.2).astype(np.uint8)
    assert boundary_ssim(b, b) == 1.0


def test_ssim_constant_maps():
    expected = ssim_constant_windows(0.0, 1.0)
    assert expected == pytest.approx(9.999000099990002e-05, rel=1e-12)
    got = boundary_ssim(np.zeros((16, 16)), np.ones((16, 16)))
    assert got == pytest.approx(expected, rel=1e-9)


def test_ssim_single_flip_drops():
    b = extract_boundary(block((48, 48), 10, 12, 20, 18))
    c = b.copy()
    c[30, 30] ^= 1
    assert boundary_ssim(b, c) < 1.0


def test_ssim_matches_direct_oracle(rng):
    for _ in range(3):
        x = (rng.random((18, 21)) < 0.3).astype(float)
        y = (rng.random((18, 21)) < 0.3).astype(float)
        assert boundary_ssim(x, y) == pytest.approx(ssim_direct(x, y), abs=1e-12)


def test_ssim_window_too_large():
    with pytest.raises(ConfigError):
        boundary_ssim(np.zeros((10, 30)), np.zeros((10, 30)))


def test_boundary_f_examples():
    truth = extract_boundary(block((20, 20), 5, 5, 8, 8))
    assert boundary_fmeasure(truth, truth) == 1.0
    shifted = np.roll(truth, 1, axis=1)
    assert boundary_fmeasure(shifted, truth, BoundaryMatchConfig(2)) == 1.0
    assert boundary_f_all_pairs(shifted, truth, 2) == 1.0
    assert boundary_fmeasure(np.zeros_like(truth), truth) == 0.0
    assert boundary_fmeasure(truth, np.zeros_like(truth)) == 0.0


def test_boundary_f_zero_tolerance():
    truth = extract_boundary(block((20, 20), 5, 5, 8, 8))
    shifted = np.roll(truth, 1, axis=1)
    got = boundary_fmeasure(shifted, truth, BoundaryMatchConfig(0))
    assert 0 < got < 1
    assert got == boundary_f_all_pairs(shifted, truth, 0)


@given(
    seed=st.integers(0, 2**32 - 1),
    tol=st.sampled_from([0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0]),
    h=st.integers(1, 24),
    w=st.integers(1, 24),
)
@settings(max_examples=120, deadline=None)
def test_boundary_f_matches_all_pairs(seed, tol, h, w):
    rng = np.random.default_rng(seed)
    a = (rng.random((h, w)) < rng.uniform(0, 0.3)).astype(np.uint8)
    b = (rng.random((h, w)) < rng.uniform(0, 0.3)).astype(np.uint8)
    assert boundary_fmeasure(a, b, BoundaryMatchConfig(tol)) == boundary_f_all_pairs(a, b, tol)


mask_pairs = st.integers(0, 2**32 - 1).map(
    lambda s: tuple((np.random.default_rng([s, k]).random((14, 15)) < 0.4).astype(np.uint8) for k in (0, 1))
)


@given(mask_pairs)
@settings(max_examples=60, deadline=None)
def test_metric_symmetry_and_identity(pair):
    a, b = pair
    assert mask_f1(a, b) == mask_f1(b, a)
    assert mask_iou(a, b) == mask_iou(b, a)
    assert boundary_fmeasure(a, b) == pytest.approx(boundary_fmeasure(b, a), abs=1e-15)
    assert boundary_ssim(a, b) == pytest.approx(boundary_ssim(b, a), abs=1e-12)
    iou, f1 = mask_iou(a, b), mask_f1(a, b)
    assert iou <= f1
    assert abs(f1 - 2 * iou / (1 + iou)) <= 1e-12


@given(seed=st.integers(0, 2**32 - 1), dr=st.integers(-3, 3), dc=st.integers(-3, 3))
@settings(max_examples=40, deadline=None)
def test_translation_invariance(seed, dr, dc):
    rng = np.random.default_rng(seed)
    # SSIM windows only see every pixel equally when content stays >= 10 px from the edge
    a, b = np.zeros((48, 48), np.uint8), np.zeros((48, 48), np.uint8)
    a[16:32, 16:32] = rng.random((16, 16)) < 0.6
    b[16:32, 16:32] = rng.random((16, 16)) < 0.6
    ra, rb = evaluate_patch(a, b), evaluate_patch(np.roll(a, (dr, dc), (0, 1)), np.roll(b, (dr, dc), (0, 1)))
    assert (ra.f1, ra.iou, ra.boundary_f) == (rb.f1, rb.iou, rb.boundary_f)
    assert ra.ssim == pytest.approx(rb.ssim, abs=1e-12)


def test_evaluate_patch_cases():
    truth = block((16, 16), 4, 5, 6, 7)
    assert evaluate_patch(truth, truth) == EvalReport(1.0, 1.0, 1.0, 1.0, 1)
    z = np.zeros((16, 16), np.uint8)
    assert evaluate_patch(z, z) == EvalReport(1.0, 1.0, 1.0, 1.0, 1)
    a, b = block((16, 16), 0, 0), block((16, 16), 1, 1)
    rep = evaluate_patch(a, b)
    assert rep.f1 == 0.25 and rep.iou == pytest.approx(1 / 7)
    ba, bb = extract_boundary(a), extract_boundary(b)
    assert rep.boundary_f == boundary_f_all_pairs(ba, bb, 2.0)
    assert rep.ssim == pytest.approx(ssim_direct(ba.astype(float), bb.astype(float)), abs=1e-12)
    on_mask = evaluate_patch(a, b, ssim_on="mask")
    assert on_mask.ssim == pytest.approx(ssim_direct(a.astype(float), b.astype(float)), abs=1e-12)
    with pytest.raises(ConfigError):
        evaluate_patch(a, b, ssim_on="edges")


def test_aggregate_is_mean():
    r1 = EvalReport(1.0, 1.0, 1.0, 1.0)
    r2 = EvalReport(0.25, 1 / 7, 0.5, 0.0)
    total = aggregate([r1, r2])
    assert total.n_patches == 2
    assert total.f1 == 0.625 and total.iou == pytest.approx((1 + 1 / 7) / 2)
    assert aggregate([total, EvalReport(0.0, 0.0, 0.0, 0.0)]).f1 == pytest.approx(1.25 / 3)
    with pytest.raises(ConfigError):
        aggregate([])


def test_negative_tolerance_rejected():
    with pytest.raises(ConfigError):
        BoundaryMatchConfig(-1)
