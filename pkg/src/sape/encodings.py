"""Positional-encoding bases: identity, random Fourier features, RBF grids.

A basis maps coordinates p in R^d to an n-vector whose first d entries
are always p itself. Every remaining output dimension belongs to a
progression group; groups are ordered by ascending Lipschitz key so the
mask module can unmask them coarse to fine. Fourier cos/sin pairs of one
frequency share a group, as do all bumps of one RBF bandwidth tier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import binfmt

KINDS = ("identity_only", "fourier", "rbf_grid")


@dataclass
class EncodingBasis:
    """Immutable encoding description.

    group_ids maps every output dimension to a group index; group 0 is
    the identity prefix. lipschitz_keys[g] is the ordering key of group g
    (0 for identity, ||b|| for a Fourier frequency, 1/h for an RBF tier)
    and is non-decreasing in g.
    """

    kind: str
    d: int
    n: int
    group_ids: np.ndarray
    lipschitz_keys: np.ndarray
    sigma: float | None = None
    frequencies: np.ndarray | None = None   # (F, d), fourier
    centers: np.ndarray | None = None       # (C, d), rbf_grid
    bandwidths: np.ndarray | None = None    # (C,), rbf_grid
    tier_sizes: list[int] | None = None     # centers per tier, rbf_grid
    seed: int | None = None

    @property
    def n_groups(self) -> int:
        """Number of non-identity progression groups."""
        return len(self.lipschitz_keys) - 1


def lipschitz_order(keys, identity_group: int = 0) -> np.ndarray:
    """Stable permutation of group indices: identity first, then ascending key.

    Idempotent: applying it to already-sorted keys yields the identity
    permutation. Ties keep their original relative order.
    """
    keys = np.asarray(keys, dtype=np.float64)
    rest = np.array([g for g in range(len(keys)) if g != identity_group])
    order = rest[np.argsort(keys[rest], kind="stable")]
    return np.concatenate([[identity_group], order]).astype(np.int64)


def identity_basis(d: int) -> EncodingBasis:
    """Plain coordinates, no extra features."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return EncodingBasis(
        kind="identity_only", d=d, n=d,
        group_ids=np.zeros(d, dtype=np.int64),
        lipschitz_keys=np.zeros(1),
    )


def sample_fourier_basis(d: int, num_frequencies: int, sigma: float,
                         seed: int) -> EncodingBasis:
    """Random Fourier features: b_i i.i.d. Gaussian(0, sigma^2) per component.

    Output has d identity dims plus a (cos, sin) pair per frequency;
    frequency groups are sorted ascending by ||b_i||.
    """
    if num_frequencies < 1:
        raise ValueError("num_frequencies must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    rng = np.random.default_rng(seed)
    freqs = rng.normal(0.0, sigma, size=(num_frequencies, d))
    norms = np.linalg.norm(freqs, axis=1)
    order = np.argsort(norms, kind="stable")
    freqs = freqs[order]
    norms = norms[order]

    n = d + 2 * num_frequencies
    group_ids = np.concatenate([
        np.zeros(d, dtype=np.int64),
        np.repeat(np.arange(1, num_frequencies + 1), 2),
    ])
    keys = np.concatenate([[0.0], norms])
    return EncodingBasis(
        kind="fourier", d=d, n=n, group_ids=group_ids, lipschitz_keys=keys,
        sigma=float(sigma), frequencies=freqs, seed=seed,
    )


def build_rbf_grid_basis(d: int, grid_per_axis, bandwidth,
                         domain: tuple[float, float] = (-1.0, 1.0)) -> EncodingBasis:
    """Gaussian bumps exp(-||p - c||^2 / (2 h^2)) on regular lattices.

    grid_per_axis and bandwidth may be scalars (one tier) or equal-length
    sequences (one lattice per bandwidth tier). Tiers are sorted ascending
    by key 1/h, so wide bumps come first.
    """
    grids = np.atleast_1d(np.asarray(grid_per_axis, dtype=np.int64))
    bands = np.atleast_1d(np.asarray(bandwidth, dtype=np.float64))
    if len(grids) != len(bands):
        raise ValueError("grid_per_axis and bandwidth must have equal length")
    if (grids < 1).any():
        raise ValueError("grid_per_axis must be >= 1")
    if (bands <= 0).any():
        raise ValueError("bandwidth must be > 0")
    lo, hi = float(domain[0]), float(domain[1])

    order = lipschitz_order(np.concatenate([[0.0], 1.0 / bands]))[1:] - 1
    centers, widths, tier_sizes = [], [], []
    for tier in order:
        g = int(grids[tier])
        axes = [np.linspace(lo, hi, g) if g > 1 else np.array([(lo + hi) / 2])
                for _ in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        c = np.stack([m.ravel() for m in mesh], axis=1)
        centers.append(c)
        widths.append(np.full(len(c), bands[tier]))
        tier_sizes.append(len(c))
    centers = np.concatenate(centers, axis=0)
    widths = np.concatenate(widths)

    n = d + len(centers)
    group_ids = np.concatenate([
        np.zeros(d, dtype=np.int64),
        np.repeat(np.arange(1, len(tier_sizes) + 1), tier_sizes),
    ])
    keys = np.concatenate([[0.0], 1.0 / bands[order]])
    return EncodingBasis(
        kind="rbf_grid", d=d, n=n, group_ids=group_ids, lipschitz_keys=keys,
        centers=centers, bandwidths=widths, tier_sizes=tier_sizes,
    )


def encode(basis: EncodingBasis, p: np.ndarray) -> np.ndarray:
    """Encode one point (d,) or a batch (m, d) to (n,) / (m, n) features."""
    p = np.asarray(p, dtype=np.float64)
    single = p.ndim == 1
    pts = p[None, :] if single else p
    if pts.ndim != 2 or pts.shape[1] != basis.d:
        raise ValueError(f"expected points of dimension {basis.d}, got {p.shape}")

    out = np.empty((len(pts), basis.n))
    out[:, :basis.d] = pts
    if basis.kind == "fourier":
        phase = 2.0 * np.pi * (pts @ basis.frequencies.T)
        out[:, basis.d::2] = np.cos(phase)
        out[:, basis.d + 1::2] = np.sin(phase)
    elif basis.kind == "rbf_grid":
        d2 = ((pts[:, None, :] - basis.centers[None, :, :]) ** 2).sum(axis=2)
        out[:, basis.d:] = np.exp(-d2 / (2.0 * basis.bandwidths ** 2))
    elif basis.kind != "identity_only":
        raise ValueError(f"unknown basis kind {basis.kind!r}")
    return out[0] if single else out


def basis_to_bytes(basis: EncodingBasis) -> bytes:
    """JSON header (kind, d, n, sigma, seed, ...) plus the raw float64 tables."""
    header = {
        "artifact": "basis",
        "kind": basis.kind,
        "d": basis.d,
        "n": basis.n,
        "sigma": basis.sigma,
        "seed": basis.seed,
        "tier_sizes": basis.tier_sizes,
    }
    if basis.kind == "fourier":
        arrays = [basis.frequencies]
    elif basis.kind == "rbf_grid":
        arrays = [basis.centers, basis.bandwidths]
    else:
        arrays = []
    arrays = arrays + [basis.group_ids.astype(np.float64), basis.lipschitz_keys]
    return binfmt.pack(header, arrays)


def basis_from_bytes(blob: bytes) -> EncodingBasis:
    header, arrays = binfmt.unpack(blob)
    if header.get("artifact") != "basis":
        raise ValueError("not an encoding-basis artifact")
    kind, d, n = header["kind"], header["d"], header["n"]
    freqs = centers = bands = None
    if kind == "fourier":
        freqs = arrays[0].reshape(-1, d)
        rest = arrays[1:]
    elif kind == "rbf_grid":
        centers = arrays[0].reshape(-1, d)
        bands = arrays[1]
        rest = arrays[2:]
    else:
        rest = arrays
    group_ids = rest[0].astype(np.int64)
    keys = rest[1]
    return EncodingBasis(
        kind=kind, d=d, n=n, group_ids=group_ids, lipschitz_keys=keys,
        sigma=header["sigma"], frequencies=freqs, centers=centers,
        bandwidths=bands, tier_sizes=header["tier_sizes"], seed=header["seed"],
    )
