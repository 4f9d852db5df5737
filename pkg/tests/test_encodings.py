"""Encoding bases: identity prefix, Fourier features, RBF grids, ordering."""

import numpy as np
import pytest

from sape.encodings import (basis_from_bytes, basis_to_bytes,
                            build_rbf_grid_basis, encode, identity_basis,
                            lipschitz_order, sample_fourier_basis)


def test_fourier_dims_and_sorted_keys():
    b = sample_fourier_basis(d=2, num_frequencies=256, sigma=10.0, seed=1)
    assert b.n == 2 + 512
    assert np.all(np.diff(b.lipschitz_keys) >= 0)
    assert b.lipschitz_keys[0] == 0.0
    # frequency keys equal the row norms
    assert np.allclose(b.lipschitz_keys[1:],
                       np.linalg.norm(b.frequencies, axis=1))


def test_fourier_deterministic():
    a = sample_fourier_basis(2, 32, 10.0, seed=5)
    b = sample_fourier_basis(2, 32, 10.0, seed=5)
    assert a.frequencies.tobytes() == b.frequencies.tobytes()


def test_fourier_sampler_std():
    # Monte-Carlo estimate of the component std against sigma, 2% tolerance
    b = sample_fourier_basis(2, 10_000, 10.0, seed=3)
    assert abs(b.frequencies.std() - 10.0) / 10.0 < 0.02


def test_fourier_rejects_bad_sigma():
    with pytest.raises(ValueError):
        sample_fourier_basis(2, 8, 0.0, seed=0)
    with pytest.raises(ValueError):
        sample_fourier_basis(2, 8, -1.0, seed=0)


def test_encode_identity_prefix_exact():
    b = sample_fourier_basis(3, 16, 4.0, seed=2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(20, 3))
    feats = encode(b, pts)
    assert np.array_equal(feats[:, :3], pts)


def test_encode_zero_frequency():
    b = sample_fourier_basis(2, 4, 1.0, seed=0)
    b.frequencies[0][:] = 0.0
    feats = encode(b, np.array([0.3, -0.7]))
    assert feats[2] == 1.0 and feats[3] == 0.0  # (cos 0, sin 0)


def test_encode_trig_identity():
    b = sample_fourier_basis(2, 32, 8.0, seed=4)
    feats = encode(b, np.random.default_rng(1).uniform(-1, 1, size=(50, 2)))
    cos, sin = feats[:, 2::2], feats[:, 3::2]
    assert np.allclose(cos ** 2 + sin ** 2, 1.0, atol=1e-12, rtol=0)


def test_encode_hand_value():
    # d=1, b=1, p=0.25: 2*pi*b*p = pi/2 -> (cos, sin) = (0, 1)
    b = sample_fourier_basis(1, 1, 1.0, seed=0)
    b.frequencies[0][0] = 1.0
    b.lipschitz_keys[1] = 1.0
    feats = encode(b, np.array([0.25]))
    assert abs(feats[1] - 0.0) < 1e-12
    assert abs(feats[2] - 1.0) < 1e-12


def test_encode_pure():
    b = sample_fourier_basis(2, 8, 2.0, seed=7)
    p = np.array([0.1, 0.2])
    assert np.array_equal(encode(b, p), encode(b, p))


def test_encode_rejects_dim_mismatch():
    b = sample_fourier_basis(2, 4, 1.0, seed=0)
    with pytest.raises(ValueError):
        encode(b, np.array([1.0, 2.0, 3.0]))


def test_group_pairing():
    b = sample_fourier_basis(2, 16, 5.0, seed=9)
    gids = b.group_ids
    assert np.array_equal(gids[:2], [0, 0])
    for k in range(16):
        assert gids[2 + 2 * k] == gids[3 + 2 * k] == k + 1


def test_rbf_peak_at_center():
    b = build_rbf_grid_basis(2, 3, 0.5, domain=(-1, 1))
    feats = encode(b, b.centers[4])
    assert feats[2 + 4] == 1.0


def test_rbf_decay_far_away():
    b = build_rbf_grid_basis(1, 2, 0.05, domain=(0.0, 0.1))
    feats = encode(b, np.array([0.8]))  # >= 10 bandwidths from all centers
    assert np.all(feats[1:] < 1e-20)


def test_rbf_hand_value():
    # centers {0, 1}, h=1, p=0.5 -> both features exp(-0.25 / 2)
    b = build_rbf_grid_basis(1, 2, 1.0, domain=(0.0, 1.0))
    feats = encode(b, np.array([0.5]))
    assert np.allclose(feats[1:], np.exp(-0.125), atol=1e-12, rtol=0)


def test_rbf_tiers_sorted_by_inverse_bandwidth():
    b = build_rbf_grid_basis(2, [8, 4], [0.1, 0.4], domain=(-1, 1))
    # wide tier (0.4) must come first: keys 1/0.4 < 1/0.1
    assert np.allclose(b.lipschitz_keys, [0.0, 2.5, 10.0])
    assert b.tier_sizes == [16, 64]
    assert np.all(np.diff(b.lipschitz_keys) >= 0)


def test_rbf_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        build_rbf_grid_basis(2, 4, 0.0)


def test_lipschitz_order_idempotent():
    perm = lipschitz_order([0.0, 1.0, 2.0, 3.0])
    assert np.array_equal(perm, [0, 1, 2, 3])


def test_lipschitz_order_reversed():
    perm = lipschitz_order([0.0, 3.0, 2.0, 1.0])
    assert np.array_equal(perm, [0, 3, 2, 1])


def test_lipschitz_order_stable_ties():
    # keys with ties keep their original relative order (stable sort)
    keys = [0.0, 2.0, 1.0, 2.0, 1.0]
    perm = lipschitz_order(keys)
    assert np.array_equal(perm, [0, 2, 4, 1, 3])
    ref = sorted(range(1, len(keys)), key=lambda g: keys[g])
    assert list(perm[1:]) == ref


def test_identity_basis():
    b = identity_basis(3)
    p = np.array([0.1, -0.2, 0.9])
    assert np.array_equal(encode(b, p), p)
    assert b.n_groups == 0


def test_serialization_roundtrip_fourier():
    b = sample_fourier_basis(2, 64, 20.0, seed=13)
    c = basis_from_bytes(basis_to_bytes(b))
    assert c.kind == "fourier" and c.d == 2 and c.n == b.n
    assert b.frequencies.tobytes() == c.frequencies.tobytes()
    assert np.array_equal(b.group_ids, c.group_ids)
    pts = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    assert np.array_equal(encode(b, pts), encode(c, pts))


def test_serialization_roundtrip_rbf():
    b = build_rbf_grid_basis(2, [4, 8], [0.5, 0.2], domain=(-1, 1))
    c = basis_from_bytes(basis_to_bytes(b))
    pts = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    assert np.array_equal(encode(b, pts), encode(c, pts))
