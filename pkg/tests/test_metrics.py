"""Metric oracles: PSNR closed forms, IoU counting, Chamfer vs double loop."""

import numpy as np
import pytest

from sape.metrics import chamfer_symmetric, iou, mse, psnr


def chamfer_double_loop(a, b):
    """Independent brute-force reference."""
    def one_way(src, dst):
        mins = []
        for p in src:
            best = None
            for q in dst:
                d2 = 0.0
                for x, y in zip(p, q):
                    d2 += (x - y) * (x - y)
                best = d2 if best is None else min(best, d2)
            mins.append(best)
        return np.mean(np.array(mins))

    return float(one_way(a, b) + one_way(b, a))


def test_psnr_identical_capped():
    img = np.random.default_rng(0).uniform(0, 1, size=(16, 16, 3))
    assert psnr(img, img) == 100.0


def test_psnr_uniform_error():
    a = np.full((8, 8), 0.5)
    b = np.full((8, 8), 0.6)
    # mse = 0.01 -> 10 log10(1/0.01) = 20 dB
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)


def test_psnr_inverted_checkerboard():
    i, j = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    a = ((i + j) % 2).astype(float)
    assert psnr(a, 1.0 - a) == pytest.approx(0.0, abs=1e-12)


def test_psnr_mse_consistency_random():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.uniform(0, 1, size=(12, 12))
        b = rng.uniform(0, 1, size=(12, 12))
        assert psnr(a, b) == pytest.approx(10 * np.log10(1 / mse(a, b)), abs=0)


def test_psnr_rejects_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_iou_identity_and_disjoint():
    a = np.zeros((4, 4), dtype=bool)
    a[:2] = True
    assert iou(a, a) == 1.0
    assert iou(a, ~a) == 0.0


def test_iou_half_overlap_counted_by_hand():
    # two 4x2 rectangles sharing one column: |A n B| = 4, |A u B| = 12
    a = np.zeros((4, 4), dtype=bool)
    b = np.zeros((4, 4), dtype=bool)
    a[:, 0:2] = True
    b[:, 1:3] = True
    assert iou(a, b) == pytest.approx(1 / 3, abs=0)


def test_iou_empty_union_is_one():
    z = np.zeros((3, 3), dtype=bool)
    assert iou(z, z) == 1.0


def test_iou_symmetry_and_bounds():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = rng.uniform(size=(6, 6)) > 0.5
        b = rng.uniform(size=(6, 6)) > 0.5
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0


def test_chamfer_identical_sets():
    pts = np.random.default_rng(2).normal(size=(20, 2))
    assert chamfer_symmetric(pts, pts) == 0.0


def test_chamfer_hand_value_1d():
    # {0} vs {1}: squared distances 1 each way, symmetric sum = 2
    assert chamfer_symmetric(np.array([[0.0]]), np.array([[1.0]])) == 2.0


def test_chamfer_matches_double_loop_exactly():
    rng = np.random.default_rng(3)
    for trial in range(5):
        a = rng.normal(size=(100, 2))
        b = rng.normal(size=(80, 2))
        assert chamfer_symmetric(a, b) == chamfer_double_loop(a, b)
    a3 = rng.normal(size=(40, 3))
    b3 = rng.normal(size=(50, 3))
    assert chamfer_symmetric(a3, b3) == chamfer_double_loop(a3, b3)


def test_chamfer_symmetry_exact():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(30, 2))
    b = rng.normal(size=(45, 2))
    assert chamfer_symmetric(a, b) == chamfer_symmetric(b, a)


def test_chamfer_rejects_empty():
    with pytest.raises(ValueError):
        chamfer_symmetric(np.zeros((0, 2)), np.zeros((3, 2)))
