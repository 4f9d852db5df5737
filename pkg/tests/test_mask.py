"""Mask schedule law, grid interpolation, loss feedback, heatmaps."""

import numpy as np
import pytest

from sape.encodings import sample_fourier_basis
from sape.mask import (MaskGrid, MaskSchedule, accumulate_loss, advance,
                       cell_weights, grid_from_bytes, grid_to_bytes, heatmap,
                       interp_alpha, node_alpha, node_losses, schedule_alpha)


def make_schedule(T=1000, n_groups=10, d=2):
    basis = sample_fourier_basis(d, n_groups, 1.0, seed=0)
    return MaskSchedule.from_basis(basis, T)


def test_tau_value():
    s = make_schedule(T=1000, n_groups=10)
    assert s.tau == 1000 / (2 * 10)


def test_schedule_alpha_hand_value():
    # T=1000, 10 groups -> tau=50; g=3, t=125: clamp((125-100)/50) = 0.5
    s = make_schedule(T=1000, n_groups=10)
    assert schedule_alpha(s, 125.0, 3) == pytest.approx(0.5, abs=0)


def test_schedule_alpha_zero_clock():
    s = make_schedule()
    for g in range(1, 11):
        assert schedule_alpha(s, 0.0, g) == 0.0


def test_schedule_alpha_saturates_by_half_T():
    s = make_schedule(T=1000, n_groups=10)
    for g in range(1, 11):
        assert schedule_alpha(s, 500.0, g) == 1.0
        assert schedule_alpha(s, 500.0 + s.tau, g) == 1.0


def test_schedule_alpha_monotone_and_bounded():
    s = make_schedule(T=777, n_groups=13)
    ts = np.linspace(0, 2 * s.T, 301)
    for g in range(1, 14):
        vals = np.array([schedule_alpha(s, t, g) for t in ts])
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0) & (vals <= 1))
    # non-increasing in g for fixed t
    for t in (0.0, 100.0, 333.3, 500.0):
        per_g = np.array([schedule_alpha(s, t, g) for g in range(1, 14)])
        assert np.all(np.diff(per_g) <= 0)


def test_schedule_alpha_rejects_bad_group():
    s = make_schedule()
    with pytest.raises(ValueError):
        schedule_alpha(s, 0.0, 0)


def test_node_alpha_zero_clock():
    s = make_schedule(n_groups=3, d=2)
    expected = np.array([1.0, 1.0, 0, 0, 0, 0, 0, 0])
    assert np.array_equal(node_alpha(s, 0.0), expected)


def test_node_alpha_saturated():
    s = make_schedule(n_groups=3, d=2)
    assert np.array_equal(node_alpha(s, s.tau * 3), np.ones(8))


def test_node_alpha_hand_value():
    # 2 groups, clock = 1.5 tau: group 1 done, group 2 halfway
    s = make_schedule(T=100, n_groups=2, d=2)
    alpha = node_alpha(s, 1.5 * s.tau)
    assert np.array_equal(alpha, [1, 1, 1, 1, 0.5, 0.5])


def test_interp_at_node_equals_node_alpha():
    s = make_schedule(n_groups=4, d=2)
    grid = MaskGrid.create((3, 3), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    grid.clocks[:] = np.arange(9, dtype=float) * 10
    coords = grid.node_coords()
    for u in range(9):
        got = interp_alpha(grid, s, coords[u])
        assert np.allclose(got, node_alpha(s, grid.clocks[u]), atol=1e-12)


def test_interp_cell_center_weights():
    grid = MaskGrid.create((2, 2), lo=(0, 0), hi=(1, 1), epsilon=1e-3)
    idx, w = cell_weights(grid, np.array([[0.5, 0.5]]))
    assert np.allclose(np.sort(w[0]), [0.25, 0.25, 0.25, 0.25], atol=1e-15)
    assert set(idx[0]) == {0, 1, 2, 3}


def test_interp_bilinear_oracle():
    # p = (0.25, 0) in the unit cell: weights 0.75/0.25 along axis 0
    s = make_schedule(n_groups=2, d=2)
    grid = MaskGrid.create((2, 2), lo=(0, 0), hi=(1, 1), epsilon=1e-3)
    grid.clocks[:] = [5.0, 7.0, 11.0, 13.0]  # nodes (0,0),(0,1),(1,0),(1,1)
    p = np.array([0.25, 0.0])
    expected = 0.75 * node_alpha(s, 5.0) + 0.25 * node_alpha(s, 11.0)
    expected[:2] = 1.0
    assert np.allclose(interp_alpha(grid, s, p), expected, atol=1e-12, rtol=0)

    # brute-force bilinear blend at a generic point
    q = np.array([0.3, 0.8])
    wx, wy = 0.3, 0.8
    ref = ((1 - wx) * (1 - wy) * node_alpha(s, 5.0)
           + (1 - wx) * wy * node_alpha(s, 7.0)
           + wx * (1 - wy) * node_alpha(s, 11.0)
           + wx * wy * node_alpha(s, 13.0))
    ref[:2] = 1.0
    assert np.allclose(interp_alpha(grid, s, q), ref, atol=1e-12, rtol=0)


def test_partition_of_unity_random_points():
    rng = np.random.default_rng(0)
    grid = MaskGrid.create((5, 7), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    pts = rng.uniform(-1.3, 1.3, size=(1000, 2))  # includes out-of-domain
    idx, w = cell_weights(grid, pts)
    assert np.all(np.abs(w.sum(axis=1) - 1.0) <= 1e-12)
    assert np.all((w >= 0) & (w <= 1))
    assert np.all((idx >= 0) & (idx < grid.num_nodes))


def test_out_of_domain_clamps():
    s = make_schedule(n_groups=2, d=2)
    grid = MaskGrid.create((4, 4), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    grid.clocks[:] = 3.0
    inside = interp_alpha(grid, s, np.array([-1.0, -1.0]))
    outside = interp_alpha(grid, s, np.array([-5.0, -2.0]))
    assert np.array_equal(inside, outside)


def test_identity_prefix_always_one():
    s = make_schedule(n_groups=3, d=2)
    grid = MaskGrid.create((3, 3), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    grid.clocks[:] = np.linspace(0, 20, 9)
    pts = np.random.default_rng(1).uniform(-1, 1, size=(64, 2))
    alpha = interp_alpha(grid, s, pts)
    assert np.all(alpha[:, :2] == 1.0)
    assert np.all((alpha >= 0) & (alpha <= 1))


def test_accumulate_single_sample_at_node():
    grid = MaskGrid.create((3,), lo=0.0, hi=1.0, epsilon=1e-3)
    accumulate_loss(grid, np.array([0.5]), 0.7)
    losses = node_losses(grid)
    assert losses[1] == pytest.approx(0.7, abs=1e-15)
    assert np.isnan(losses[0]) and np.isnan(losses[2])


def test_accumulate_two_samples_mean():
    grid = MaskGrid.create((2,), lo=0.0, hi=1.0, epsilon=1e-3)
    accumulate_loss(grid, np.array([[0.0], [0.0]]), np.array([0.2, 0.6]))
    assert node_losses(grid)[0] == pytest.approx(0.4, abs=1e-15)


def test_accumulate_matches_dense_oracle():
    rng = np.random.default_rng(2)
    grid = MaskGrid.create((4, 4), lo=(0, 0), hi=(1, 1), epsilon=1e-3)
    pts = rng.uniform(0, 1, size=(100, 2))
    losses = rng.uniform(0, 1, size=100)
    accumulate_loss(grid, pts, losses)

    # independent dense accumulation, one sample at a time
    num = np.zeros(16)
    den = np.zeros(16)
    for p, L in zip(pts, losses):
        idx, w = cell_weights(grid, p[None, :])
        for j, ww in zip(idx[0], w[0]):
            num[j] += ww * L
            den[j] += ww
    got = node_losses(grid)
    ref = np.where(den > 0, num / np.maximum(den, 1e-300), np.nan)
    both = den > 0
    assert np.allclose(got[both], ref[both], atol=1e-12, rtol=0)
    assert np.array_equal(np.isnan(got), np.isnan(ref))


def test_accumulate_rejects_negative_loss():
    grid = MaskGrid.create((2,), lo=0.0, hi=1.0, epsilon=1e-3)
    with pytest.raises(ValueError):
        accumulate_loss(grid, np.array([0.5]), -1.0)


def test_advance_uniform():
    grid = MaskGrid.create((3, 3), lo=(0, 0), hi=(1, 1), epsilon=0.1,
                           feedback_interval=2)
    accumulate_loss(grid, grid.node_coords(), np.full(9, 0.5))
    advance(grid)
    assert np.array_equal(grid.clocks, np.full(9, 2.0))
    assert not grid.frozen.any()
    assert np.all(grid.loss_num == 0) and np.all(grid.loss_den == 0)


def test_advance_freezes_converged_node():
    grid = MaskGrid.create((1,), lo=0.0, hi=1.0, epsilon=0.1)
    accumulate_loss(grid, np.array([0.5]), 0.01)
    advance(grid)
    assert grid.clocks[0] == 0.0 and grid.frozen[0]


def test_advance_skips_unsampled_nodes():
    grid = MaskGrid.create((3,), lo=0.0, hi=1.0, epsilon=0.1)
    accumulate_loss(grid, np.array([0.0]), 0.5)
    advance(grid)
    assert grid.clocks[0] == 1.0
    assert grid.clocks[1] == 0.0 and grid.clocks[2] == 0.0
    assert not grid.frozen[1] and not grid.frozen[2]


def test_advance_hand_simulated_trace():
    # 1D 3-node grid over two feedback rounds, epsilon = 0.1
    grid = MaskGrid.create((3,), lo=0.0, hi=1.0, epsilon=0.1)
    nodes = grid.node_coords()[:, 0]

    accumulate_loss(grid, nodes[:, None], np.array([0.5, 0.05, 0.2]))
    advance(grid)
    assert np.array_equal(grid.clocks, [1.0, 0.0, 1.0])
    assert np.array_equal(grid.frozen, [False, True, False])

    # node 1 thaws and advances in the same round its loss recrosses epsilon
    accumulate_loss(grid, nodes[:, None], np.array([0.05, 0.3, 0.2]))
    advance(grid)
    assert np.array_equal(grid.clocks, [1.0, 1.0, 2.0])
    assert np.array_equal(grid.frozen, [True, False, False])


def test_clock_monotone_under_random_feedback():
    rng = np.random.default_rng(3)
    grid = MaskGrid.create((4, 4), lo=(0, 0), hi=(1, 1), epsilon=0.5)
    prev = grid.clocks.copy()
    for _ in range(20):
        pts = rng.uniform(0, 1, size=(50, 2))
        accumulate_loss(grid, pts, rng.uniform(0, 1, size=50))
        advance(grid)
        assert np.all(grid.clocks >= prev)
        prev = grid.clocks.copy()


def test_degenerate_grid_is_single_global_node():
    grid = MaskGrid.create((1, 1), lo=(-1, -1), hi=(1, 1), epsilon=0.1)
    pts = np.random.default_rng(4).uniform(-1, 1, size=(30, 2))
    idx, w = cell_weights(grid, pts)
    assert np.all(idx == 0)
    assert np.all(np.abs(w.sum(axis=1) - 1.0) <= 1e-12)
    accumulate_loss(grid, pts, np.full(30, 0.2))
    advance(grid)
    assert grid.clocks[0] == 1.0


def test_heatmap_zero_and_saturated():
    s = make_schedule(T=100, n_groups=4, d=2)
    grid = MaskGrid.create((3, 3), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    assert np.array_equal(heatmap(grid, s), np.zeros((3, 3)))
    grid.clocks[:] = s.tau * s.n_groups
    assert np.allclose(heatmap(grid, s), s.group_keys[-1], atol=0)


def test_heatmap_mixed_matches_per_node_oracle():
    s = make_schedule(T=200, n_groups=5, d=2)
    grid = MaskGrid.create((2, 3), lo=(-1, -1), hi=(1, 1), epsilon=1e-3)
    grid.clocks[:] = [0.0, 15.0, 35.0, 55.0, 120.0, 200.0]
    hm = heatmap(grid, s).ravel()
    for u in range(6):
        alpha_groups = [1.0] + [schedule_alpha(s, grid.clocks[u], g)
                                for g in range(1, 6)]
        keys = [k for k, a in zip(s.group_keys, alpha_groups) if a > 0.5]
        assert hm[u] == pytest.approx(max(keys), abs=0)


def test_grid_serialization_roundtrip():
    grid = MaskGrid.create((4, 4), lo=(-1, -1), hi=(1, 1), epsilon=2e-3,
                           feedback_interval=3)
    grid.clocks[:] = np.arange(16, dtype=float)
    grid.frozen[::2] = True
    s = make_schedule(T=500, n_groups=6)
    back = grid_from_bytes(grid_to_bytes(grid, s))
    assert back.resolution == (4, 4)
    assert back.epsilon == 2e-3 and back.feedback_interval == 3
    assert np.array_equal(back.clocks, grid.clocks)
    assert np.array_equal(back.frozen, grid.frozen)


def test_create_validates_arguments():
    with pytest.raises(ValueError):
        MaskGrid.create((0, 2), lo=(0, 0), hi=(1, 1), epsilon=1e-3)
    with pytest.raises(ValueError):
        MaskGrid.create((2, 2), lo=(0, 0), hi=(1, 1), epsilon=0.0)
    with pytest.raises(ValueError):
        MaskGrid.create((2, 2), lo=(1, 0), hi=(1, 1), epsilon=1e-3)
