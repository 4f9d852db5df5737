"""Progressive encoding masks with per-region feedback.

Two pieces work together here. MaskSchedule is the time law: group g of
the encoding ramps linearly from 0 to 1 over the clock interval
[tau*(g-1), tau*g] with tau = T / (2 * n_groups), so every group is fully
revealed once a clock reaches T/2. MaskGrid is the spatial state: a
regular lattice of progression clocks. Each training sample reads its
mask as a multilinear blend of the surrounding node masks, scatters its
loss back to those nodes with the same weights, and a node's clock only
advances while its accumulated loss stays at or above the convergence
threshold epsilon. Identity dimensions are never masked.

Grid nodes store a scalar clock, not an n-vector; full alpha vectors are
materialized from the schedule on demand and the blend is performed on
those vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import binfmt
from .encodings import EncodingBasis


@dataclass
class MaskSchedule:
    """Linear group-progression law derived from a basis and a budget T."""

    T: int
    n_groups: int
    d: int
    tau: float
    group_ids: np.ndarray    # (n,) output dim -> group, 0 = identity
    group_keys: np.ndarray   # (n_groups + 1,) Lipschitz keys incl. identity

    @classmethod
    def from_basis(cls, basis: EncodingBasis, T: int) -> "MaskSchedule":
        if T < 1:
            raise ValueError("T must be >= 1")
        n_groups = basis.n_groups
        tau = T / (2.0 * n_groups) if n_groups > 0 else float(T)
        return cls(T=int(T), n_groups=n_groups, d=basis.d, tau=tau,
                   group_ids=basis.group_ids, group_keys=basis.lipschitz_keys)


def schedule_alpha(schedule: MaskSchedule, t_clock: float, g) -> np.ndarray | float:
    """Mask value of non-identity group g (>= 1) at clock t_clock.

    clamp((t - tau*(g-1)) / tau, 0, 1): group 1 starts ramping at t=0 and
    group g is fully revealed at t = tau*g. Evaluated as
    clamp(t*2*n_groups/T - (g-1), 0, 1), the same ramp but exact at the
    t = T/2 saturation point for integer clocks.
    """
    g_arr = np.asarray(g)
    if (g_arr < 1).any():
        raise ValueError("group index must be >= 1")
    progress = t_clock * (2.0 * schedule.n_groups) / schedule.T
    val = np.clip(progress - (g_arr - 1), 0.0, 1.0)
    return float(val) if np.isscalar(g) else val


def group_alpha(schedule: MaskSchedule, clock: float) -> np.ndarray:
    """Alpha per group at one clock, index 0 being the identity group (=1)."""
    out = np.ones(schedule.n_groups + 1)
    if schedule.n_groups > 0:
        out[1:] = schedule_alpha(schedule, clock, np.arange(1, schedule.n_groups + 1))
    return out


def node_alpha(schedule: MaskSchedule, clock: float) -> np.ndarray:
    """Full n-dim mask at one clock: 1 on the identity prefix, the group
    ramp value duplicated across all dims of each group (cos/sin pairs)."""
    if clock < 0:
        raise ValueError("clock must be >= 0")
    return group_alpha(schedule, clock)[schedule.group_ids]


def _group_alpha_matrix(schedule: MaskSchedule, clocks: np.ndarray) -> np.ndarray:
    """Per-group ramp values for many clocks, (len(clocks), n_groups + 1)."""
    clocks = np.asarray(clocks, dtype=np.float64)
    ga = np.ones((len(clocks), schedule.n_groups + 1))
    if schedule.n_groups > 0:
        g = np.arange(1, schedule.n_groups + 1)
        progress = clocks * (2.0 * schedule.n_groups) / schedule.T
        ga[:, 1:] = np.clip(progress[:, None] - (g - 1), 0.0, 1.0)
    return ga


def node_alpha_matrix(schedule: MaskSchedule, clocks: np.ndarray) -> np.ndarray:
    """node_alpha for many clocks at once; returns (len(clocks), n)."""
    return _group_alpha_matrix(schedule, clocks)[:, schedule.group_ids]


@dataclass(eq=False)
class MaskGrid:
    """Regular lattice of progression clocks with loss-feedback state.

    Arrays are flat over the row-major node order. A resolution of 1 per
    axis degenerates to a single global node. Queries outside the domain
    clamp to the boundary.
    """

    resolution: tuple[int, ...]
    lo: np.ndarray
    hi: np.ndarray
    epsilon: float
    feedback_interval: int
    clocks: np.ndarray
    frozen: np.ndarray
    loss_num: np.ndarray
    loss_den: np.ndarray
    version: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def create(cls, resolution, lo, hi, epsilon: float,
               feedback_interval: int = 1, initial_clock: float = 0.0) -> "MaskGrid":
        resolution = tuple(int(r) for r in np.atleast_1d(resolution))
        if any(r < 1 for r in resolution):
            raise ValueError("resolution must be >= 1 per axis")
        if epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if feedback_interval < 1:
            raise ValueError("feedback_interval must be >= 1")
        d = len(resolution)
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (d,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (d,)).copy()
        if (hi <= lo).any():
            raise ValueError("need lo < hi per axis")
        num = int(np.prod(resolution))
        return cls(
            resolution=resolution, lo=lo, hi=hi, epsilon=float(epsilon),
            feedback_interval=int(feedback_interval),
            clocks=np.full(num, float(initial_clock)),
            frozen=np.zeros(num, dtype=bool),
            loss_num=np.zeros(num), loss_den=np.zeros(num),
        )

    @property
    def d(self) -> int:
        return len(self.resolution)

    @property
    def num_nodes(self) -> int:
        return len(self.clocks)

    def node_coords(self) -> np.ndarray:
        """Positions of all nodes, (num_nodes, d) in row-major order."""
        axes = [np.linspace(self.lo[a], self.hi[a], r) if r > 1
                else np.array([(self.lo[a] + self.hi[a]) / 2])
                for a, r in enumerate(self.resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def cell_weights(grid: MaskGrid, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Multilinear footprint of points on the grid.

    Returns (idx, w), both (m, 2^d): flat node indices of the surrounding
    cell corners and their interpolation weights. Weights of each row sum
    to 1; out-of-domain points are clamped to the boundary.
    """
    p = np.asarray(p, dtype=np.float64)
    pts = p[None, :] if p.ndim == 1 else p
    if pts.shape[1] != grid.d:
        raise ValueError(f"expected points of dimension {grid.d}")
    m, d = pts.shape
    res = np.array(grid.resolution)

    i0 = np.zeros((m, d), dtype=np.int64)
    frac = np.zeros((m, d))
    for a in range(d):
        r = grid.resolution[a]
        if r == 1:
            continue
        x = (pts[:, a] - grid.lo[a]) / (grid.hi[a] - grid.lo[a]) * (r - 1)
        x = np.clip(x, 0.0, float(r - 1))
        i = np.minimum(np.floor(x).astype(np.int64), r - 2)
        i0[:, a] = i
        frac[:, a] = x - i

    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * res[a + 1]

    corners = 1 << d
    idx = np.empty((m, corners), dtype=np.int64)
    w = np.empty((m, corners))
    for c in range(corners):
        flat = np.zeros(m, dtype=np.int64)
        weight = np.ones(m)
        for a in range(d):
            bit = (c >> a) & 1
            ia = i0[:, a] + bit
            ia = np.minimum(ia, res[a] - 1)  # res==1 axes stay at node 0
            flat += ia * strides[a]
            weight = weight * (frac[:, a] if bit else 1.0 - frac[:, a])
        idx[:, c] = flat
        w[:, c] = weight
    return idx, w


def _node_alpha_cached(grid: MaskGrid, schedule: MaskSchedule):
    """(unique clocks -> alpha rows, node -> unique index), cached per version."""
    key = (grid.version, id(schedule))
    hit = grid._cache.get("alpha")
    if hit is not None and hit[0] == key:
        return hit[1], hit[2]
    uniq, inverse = np.unique(grid.clocks, return_inverse=True)
    matrix = node_alpha_matrix(schedule, uniq)
    grid._cache["alpha"] = (key, matrix, inverse)
    return matrix, inverse


def interp_alpha_at(grid: MaskGrid, schedule: MaskSchedule,
                    idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Blend node masks over a precomputed footprint; returns (m, n).

    Computed as v0 + sum_c w_c (v_c - v0), which uses the exact same
    weights but stays bit-exact when all corners agree (saturated or
    untouched regions), so a fully revealed mask is exactly 1.
    """
    matrix, inverse = _node_alpha_cached(grid, schedule)
    base = matrix[inverse[idx[:, 0]]]
    alpha = base.copy()
    for c in range(1, idx.shape[1]):
        alpha += w[:, c, None] * (matrix[inverse[idx[:, c]]] - base)
    alpha[:, :schedule.d] = 1.0  # identity prefix pinned exactly
    return alpha


def interp_alpha(grid: MaskGrid, schedule: MaskSchedule, p: np.ndarray) -> np.ndarray:
    """Mask at arbitrary positions: multilinear blend of the 2^d node masks.

    Used identically during training and at inference, so masks extend
    continuously over the whole domain. Returns (n,) for a single point.
    """
    p = np.asarray(p, dtype=np.float64)
    single = p.ndim == 1
    idx, w = cell_weights(grid, p)
    alpha = interp_alpha_at(grid, schedule, idx, w)
    return alpha[0] if single else alpha


def accumulate_at(grid: MaskGrid, idx: np.ndarray, w: np.ndarray,
                  losses: np.ndarray) -> None:
    """Scatter per-sample losses onto nodes with a precomputed footprint."""
    losses = np.asarray(losses, dtype=np.float64)
    if (losses < 0).any():
        raise ValueError("per-sample losses must be >= 0")
    np.add.at(grid.loss_num, idx, w * losses[:, None])
    np.add.at(grid.loss_den, idx, w)


def accumulate_loss(grid: MaskGrid, p: np.ndarray, per_sample_loss) -> None:
    """Scatter losses of samples at positions p back onto neighboring nodes.

    Each neighbor u receives loss_num += w * loss and loss_den += w, so
    its window loss is the weighted mean of the losses it influenced.
    """
    p = np.asarray(p, dtype=np.float64)
    losses = np.atleast_1d(np.asarray(per_sample_loss, dtype=np.float64))
    idx, w = cell_weights(grid, p)
    accumulate_at(grid, idx, w, losses)


def node_losses(grid: MaskGrid) -> np.ndarray:
    """Current window loss per node; NaN where no sample contributed."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(grid.loss_den > 0,
                        grid.loss_num / np.maximum(grid.loss_den, 1e-300),
                        np.nan)


def advance(grid: MaskGrid) -> None:
    """One feedback round: advance unconverged nodes, hold converged ones.

    A node with window loss >= epsilon advances its clock by
    feedback_interval (thawing it if it was frozen); a node with loss
    below epsilon keeps its clock and is marked frozen. Nodes that saw no
    samples are left untouched. Accumulators reset afterwards.
    """
    active = grid.loss_den > 0
    loss = np.zeros(grid.num_nodes)
    loss[active] = grid.loss_num[active] / grid.loss_den[active]
    adv = active & (loss >= grid.epsilon)
    grid.clocks[adv] += grid.feedback_interval
    grid.frozen[adv] = False
    grid.frozen[active & ~adv] = True
    grid.loss_num[:] = 0.0
    grid.loss_den[:] = 0.0
    grid.version += 1


def heatmap(grid: MaskGrid, schedule: MaskSchedule) -> np.ndarray:
    """Per node, the largest Lipschitz key whose group mask exceeds 0.5.

    Shaped like the grid resolution; all-zero when only identity dims are
    exposed.
    """
    uniq, inverse = np.unique(grid.clocks, return_inverse=True)
    ga = _group_alpha_matrix(schedule, uniq)
    revealed = np.where(ga > 0.5, schedule.group_keys[None, :], -np.inf)
    per_unique = revealed.max(axis=1)
    return per_unique[inverse].reshape(grid.resolution)


def grid_to_bytes(grid: MaskGrid, schedule: MaskSchedule | None = None) -> bytes:
    """JSON header (resolution, epsilon, T, n_groups, ...) + float64 clocks."""
    header = {
        "artifact": "mask_grid",
        "resolution": list(grid.resolution),
        "epsilon": grid.epsilon,
        "feedback_interval": grid.feedback_interval,
        "lo": grid.lo.tolist(),
        "hi": grid.hi.tolist(),
        "T": schedule.T if schedule else None,
        "n_groups": schedule.n_groups if schedule else None,
    }
    return binfmt.pack(header, [grid.clocks, grid.frozen.astype(np.float64)])


def grid_from_bytes(blob: bytes) -> MaskGrid:
    header, arrays = binfmt.unpack(blob)
    if header.get("artifact") != "mask_grid":
        raise ValueError("not a mask-grid artifact")
    grid = MaskGrid.create(
        header["resolution"], header["lo"], header["hi"],
        header["epsilon"], header["feedback_interval"])
    grid.clocks[:] = arrays[0]
    grid.frozen[:] = arrays[1] > 0.5
    return grid
