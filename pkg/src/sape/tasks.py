"""End-to-end training: encoder -> mask -> MLP -> loss -> feedback.

One generic regression loop drives the image, 1D-signal, and occupancy
tasks; silhouette deformation adds a calibration phase and a Chamfer
loop. Seed streams are fixed so a (config, data) pair always reproduces
the same trajectory: the encoding basis uses seed, network init seed+1,
batch sampling seed+2, occupancy point sampling seed+3, and evaluation
sampling seed+4.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import metrics as metrics_mod
from .encodings import (EncodingBasis, build_rbf_grid_basis, encode,
                        identity_basis, sample_fourier_basis)
from .mask import (MaskGrid, MaskSchedule, accumulate_at, advance,
                   cell_weights, heatmap, interp_alpha, interp_alpha_at)
from .metrics import MetricResult, chamfer_symmetric, iou, psnr
from .nn import (AdamState, MlpParams, TrainingDiverged, adam_step,
                 init_params, mlp_backward, mlp_forward)
from .raster import polygon_is_closed, polygon_self_intersects, rasterize_polygon

TASKS = ("image2d", "signal1d", "silhouette2d", "occupancy")
ENCODINGS = ("none", "fourier", "rbf_grid")

FULL_BATCH_LIMIT = 4096
MINIBATCH_SIZE = 8192

# task defaults: (epsilon, hidden_width, depth, T)
_TASK_DEFAULTS = {
    "image2d": (1e-3, 256, 4, 2000),
    "signal1d": (1e-3, 128, 3, 2000),
    "silhouette2d": (1e-2, 128, 3, 5000),
    "occupancy": (1e-3, 256, 4, 5000),
}


@dataclass
class TrainConfig:
    """Everything that defines a run; None fields resolve to task defaults."""

    task: str
    encoding: str = "fourier"
    sape_enabled: bool = True
    spatial_enabled: bool = True
    sigma: float = 10.0
    num_frequencies: int = 256
    T: int | None = None
    epsilon: float | None = None
    grid_resolution: tuple[int, ...] | None = None
    batch_size: int | None = None
    lr: float = 1e-3
    seed: int = 0
    hidden_width: int | None = None
    depth: int | None = None
    feedback_interval: int = 1
    mask_initial_clock: float = 0.0
    rbf_grid_sizes: tuple[int, ...] = (4, 8, 16)
    rbf_bandwidths: tuple[float, ...] | None = None
    curve_samples: int = 512
    calibration_iters: int = 5000
    occupancy_samples: int = 30_000
    raster_resolution: int = 512

    def resolved(self, d: int) -> "TrainConfig":
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        eps, width, depth, iters = _TASK_DEFAULTS[self.task]
        cfg = replace(
            self,
            T=self.T if self.T is not None else iters,
            epsilon=self.epsilon if self.epsilon is not None else eps,
            hidden_width=self.hidden_width or width,
            depth=self.depth or depth,
        )
        if not cfg.spatial_enabled:
            cfg = replace(cfg, grid_resolution=(1,) * d)
        elif cfg.grid_resolution is None:
            cfg = replace(cfg, grid_resolution=(32,) * d)
        else:
            res = tuple(int(r) for r in np.atleast_1d(cfg.grid_resolution))
            if len(res) == 1:
                res = res * d
            cfg = replace(cfg, grid_resolution=res)
        if cfg.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        return cfg


@dataclass
class SignalDataset:
    """Sample table for direct-supervision tasks.

    coords/targets hold all samples; train_mask selects the training
    subset and the rest (or all of it) serves as the dense evaluation.
    """

    coords: np.ndarray
    targets: np.ndarray
    train_mask: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    output_activation: str = "linear"

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if self.targets.shape[0] != self.coords.shape[0]:
            raise ValueError("coords and targets must have equal length")
        self.train_mask = np.asarray(self.train_mask, dtype=bool)
        self.lo = np.broadcast_to(
            np.asarray(self.lo, np.float64), (self.coords.shape[1],)).copy()
        self.hi = np.broadcast_to(
            np.asarray(self.hi, np.float64), (self.coords.shape[1],)).copy()

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def out_dim(self) -> int:
        return self.targets.shape[1]


@dataclass
class TrainReport:
    """Run results plus in-memory handles for artifact writing."""

    config: dict
    metrics: list[MetricResult]
    loss_trace: list[float]
    wall_time_s: float
    params: MlpParams | None = None
    grid: MaskGrid | None = None
    schedule: MaskSchedule | None = None
    basis: EncodingBasis | None = None
    heatmap: np.ndarray | None = None
    clock_snapshot_mid: np.ndarray | None = None
    output_image: np.ndarray | None = None
    output_points: np.ndarray | None = None
    target_kind: str = ""
    target_payload: object = None

    def metric(self, name: str) -> float:
        for m in self.metrics:
            if m.name == name:
                return m.value
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "metrics": [m.to_dict() for m in self.metrics],
            "loss_trace": self.loss_trace,
            "wall_time_s": self.wall_time_s,
        }


def make_basis(cfg: TrainConfig, d: int, lo, hi) -> EncodingBasis:
    if cfg.encoding == "none":
        return identity_basis(d)
    if cfg.encoding == "fourier":
        return sample_fourier_basis(d, cfg.num_frequencies, cfg.sigma, cfg.seed)
    sizes = cfg.rbf_grid_sizes
    extent = float(np.max(np.asarray(hi) - np.asarray(lo)))
    bands = cfg.rbf_bandwidths
    if bands is None:
        bands = tuple(extent / g for g in sizes)
    return build_rbf_grid_basis(d, sizes, bands,
                                domain=(float(np.min(lo)), float(np.max(hi))))


def _mask_components(cfg: TrainConfig, basis: EncodingBasis, lo, hi):
    if not cfg.sape_enabled:
        return None, None
    schedule = MaskSchedule.from_basis(basis, max(cfg.T, 1))
    grid = MaskGrid.create(cfg.grid_resolution, lo, hi, cfg.epsilon,
                           cfg.feedback_interval,
                           initial_clock=cfg.mask_initial_clock)
    return grid, schedule


def _fit_mse(cfg: TrainConfig, coords, targets, lo, hi, output_activation,
             basis, grid, schedule, *, T=None, params=None, state=None,
             fixed_alpha=None, stop_below=None, on_iteration=None):
    """Shared regression loop. Returns (params, trace, clock_snapshot)."""
    m = len(coords)
    T = cfg.T if T is None else T
    enc = encode(basis, coords)
    if fixed_alpha is not None:
        enc = enc * fixed_alpha[None, :]

    use_mask = grid is not None and fixed_alpha is None
    if use_mask:
        foot_idx, foot_w = cell_weights(grid, coords)

    if params is None:
        params = init_params(basis.n, cfg.hidden_width, cfg.depth,
                             targets.shape[1], cfg.seed + 1, output_activation)
    if state is None:
        state = AdamState.init(params, lr=cfg.lr)
    batch_rng = np.random.default_rng(cfg.seed + 2)
    mb = cfg.batch_size if cfg.batch_size is not None else (
        m if m <= FULL_BATCH_LIMIT else MINIBATCH_SIZE)
    full_batch = mb >= m

    trace: list[float] = []
    snapshot = None
    alpha_cache_version = -1
    alpha_cache = None
    for t in range(T):
        if full_batch:
            feats = enc
            ids = None
        else:
            ids = batch_rng.integers(0, m, size=mb)
            feats = enc[ids]
        if use_mask:
            if full_batch:
                if grid.version != alpha_cache_version:
                    alpha_cache = interp_alpha_at(grid, schedule,
                                                  foot_idx, foot_w)
                    alpha_cache_version = grid.version
                alpha = alpha_cache
            else:
                alpha = interp_alpha_at(grid, schedule,
                                        foot_idx[ids], foot_w[ids])
            feats = alpha * feats

        y, cache = mlp_forward(params, feats)
        tgt = targets if ids is None else targets[ids]
        err = y - tgt
        per_sample = np.mean(err * err, axis=1)
        loss = float(per_sample.mean())
        if not np.isfinite(loss):
            raise TrainingDiverged("non-finite loss", t)
        trace.append(loss)

        grads = mlp_backward(params, cache, (2.0 / err.size) * err)
        adam_step(params, grads, state)

        if use_mask:
            if ids is None:
                accumulate_at(grid, foot_idx, foot_w, per_sample)
            else:
                accumulate_at(grid, foot_idx[ids], foot_w[ids], per_sample)
            if (t + 1) % cfg.feedback_interval == 0:
                advance(grid)
        if use_mask and t + 1 == T // 2:
            snapshot = grid.clocks.copy()
        if on_iteration is not None:
            on_iteration(t, params, loss, grid)
        if stop_below is not None and loss < stop_below:
            break
    return params, state, trace, snapshot


def predict(params: MlpParams, basis: EncodingBasis, grid: MaskGrid | None,
            schedule: MaskSchedule | None, coords: np.ndarray,
            chunk: int = 16384) -> np.ndarray:
    """Masked inference at arbitrary coordinates (mask extends by
    interpolation over the whole domain)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    outs = []
    for s in range(0, len(coords), chunk):
        block = coords[s:s + chunk]
        feats = encode(basis, block)
        if grid is not None:
            feats = interp_alpha(grid, schedule, block) * feats
        outs.append(mlp_forward(params, feats)[0])
    return np.concatenate(outs, axis=0)


def train(config: TrainConfig, dataset: SignalDataset, *, on_iteration=None):
    """Run the full loop on a sample table; returns (params, grid, report).

    Per iteration: encode -> mask -> forward -> per-sample loss ->
    scatter to grid -> backward/Adam -> periodic advance. Deterministic
    per seed; raises TrainingDiverged (with the iteration) on non-finite
    loss.
    """
    cfg = config.resolved(dataset.d)
    t0 = time.perf_counter()
    basis = make_basis(cfg, dataset.d, dataset.lo, dataset.hi)
    grid, schedule = _mask_components(cfg, basis, dataset.lo, dataset.hi)
    coords = dataset.coords[dataset.train_mask]
    targets = dataset.targets[dataset.train_mask]
    params, _, trace, snapshot = _fit_mse(
        cfg, coords, targets, dataset.lo, dataset.hi,
        dataset.output_activation, basis, grid, schedule,
        on_iteration=on_iteration)
    report = TrainReport(
        config=asdict(cfg), metrics=[], loss_trace=trace,
        wall_time_s=time.perf_counter() - t0,
        params=params, grid=grid, schedule=schedule, basis=basis,
        heatmap=heatmap(grid, schedule) if grid is not None else None,
        clock_snapshot_mid=snapshot,
    )
    return params, grid, report


# ------------------------------------------------------------------ image

def image_coords(height: int, width: int) -> np.ndarray:
    """Pixel centers normalized to [-1, 1]^2 as (x, y), row-major."""
    ys = (np.arange(height) + 0.5) / height * 2.0 - 1.0
    xs = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def image_dataset(image: np.ndarray) -> SignalDataset:
    """All pixels as samples; the regular stride-2 grid (25%) as training."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    train = ((rows % 2 == 0) & (cols % 2 == 0)).ravel()
    return SignalDataset(
        coords=image_coords(h, w), targets=img.reshape(-1, c),
        train_mask=train, lo=(-1.0, -1.0), hi=(1.0, 1.0),
        output_activation="sigmoid")


def fit_image(config: TrainConfig, image: np.ndarray, *,
              on_iteration=None) -> TrainReport:
    """Train on the 25% regular pixel subsample, report PSNR on all pixels."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim not in (2, 3) or min(img.shape[:2]) < 8:
        raise ValueError("image must be at least 8x8")
    dataset = image_dataset(img)
    cfg = config
    if cfg.grid_resolution is None and cfg.spatial_enabled:
        # default: one node per training sample (the stride-2 grid)
        cfg = replace(cfg, grid_resolution=(int(np.ceil(img.shape[1] / 2)),
                                            int(np.ceil(img.shape[0] / 2))))
    params, grid, report = train(cfg, dataset, on_iteration=on_iteration)
    pred = predict(params, report.basis, grid, report.schedule, dataset.coords)
    shape = img.shape if img.ndim == 3 else img.shape[:2]
    pred_img = np.clip(pred, 0.0, 1.0).reshape(shape)
    report.metrics = [
        MetricResult("psnr", psnr(pred_img, img), "entire image"),
        MetricResult("mse", metrics_mod.mse(pred_img, img), "entire image"),
    ]
    report.output_image = pred_img
    report.target_kind = "image"
    report.target_payload = img
    return report


# ------------------------------------------------------------------ 1D signal

def signal_dataset(fn, train_samples: int = 512,
                   dense_samples: int = 4096) -> SignalDataset:
    """Dense samples of fn over [0, 1]; a regular subset of them trains."""
    xs = (np.arange(dense_samples) + 0.5) / dense_samples
    ys = np.asarray(fn(xs), dtype=np.float64).reshape(-1, 1)
    stride = max(dense_samples // train_samples, 1)
    train = np.zeros(dense_samples, dtype=bool)
    train[::stride] = True
    return SignalDataset(coords=xs[:, None], targets=ys, train_mask=train,
                         lo=0.0, hi=1.0, output_activation="linear")


def fit_signal_1d(config: TrainConfig, signal: SignalDataset, *,
                  on_iteration=None) -> TrainReport:
    """Train the 1D regression and report dense MSE, overall and per half."""
    params, grid, report = train(config, signal, on_iteration=on_iteration)
    pred = predict(params, report.basis, grid, report.schedule, signal.coords)
    x = signal.coords[:, 0]
    mid = (signal.lo[0] + signal.hi[0]) / 2
    left, right = x < mid, x >= mid
    err2 = np.mean((pred - signal.targets) ** 2, axis=1)
    report.metrics = [
        MetricResult("mse_dense", float(err2.mean()), "dense grid"),
        MetricResult("mse_left_half", float(err2[left].mean()),
                     "dense grid, first half of the domain"),
        MetricResult("mse_right_half", float(err2[right].mean()),
                     "dense grid, second half of the domain"),
    ]
    report.output_points = np.column_stack([x, pred])
    report.target_kind = "signal"
    report.target_payload = np.column_stack([x, signal.targets])
    return report


# ------------------------------------------------------------------ silhouette

def _circle_targets(p: np.ndarray) -> np.ndarray:
    t = 2 * np.pi * p
    return np.stack([np.cos(t), np.sin(t)], axis=1)


def fit_silhouette(config: TrainConfig, target_points: np.ndarray, *,
                   on_iteration=None) -> TrainReport:
    """Deform the unit circle onto a target outline.

    Phase 1 calibrates f(p) = (cos 2*pi*p, sin 2*pi*p) under the initial
    mask state (full encoding for the static baseline). Phase 2 descends
    the symmetric Chamfer distance to the target with mask feedback keyed
    on each output vertex's nearest-target squared distance. Reports the
    exact Chamfer metric and the rasterized IoU against the target.
    """
    targets = np.asarray(target_points, dtype=np.float64)
    if targets.ndim != 2 or targets.shape[1] != 2 or len(targets) < 3:
        raise ValueError("target must be an (m, 2) point cloud")
    if not polygon_is_closed(targets):
        warnings.warn("target outline looks open; treating it as closed")
    if polygon_self_intersects(targets):
        warnings.warn("target outline self-intersects; IoU uses even-odd fill")

    cfg = config if config.grid_resolution is not None or not config.spatial_enabled \
        else replace(config, grid_resolution=(16,))
    cfg = cfg.resolved(d=1)
    t0 = time.perf_counter()
    K = cfg.curve_samples
    p = (np.arange(K) / K)[:, None]
    basis = make_basis(cfg, 1, [0.0], [1.0])
    grid, schedule = _mask_components(cfg, basis, [0.0], [1.0])

    # phase 1: calibration to the unit circle under a fixed mask state
    if cfg.sape_enabled:
        from .mask import node_alpha
        alpha0 = node_alpha(schedule, cfg.mask_initial_clock)
    else:
        alpha0 = np.ones(basis.n)
    circle = _circle_targets(p[:, 0])
    params, state, calib_trace, _ = _fit_mse(
        cfg, p, circle, [0.0], [1.0], "linear", basis, None, None,
        T=cfg.calibration_iters, fixed_alpha=alpha0, stop_below=1e-4)
    calibration_mse = calib_trace[-1] if calib_trace else 0.0

    # phase 2: symmetric Chamfer descent with per-vertex feedback
    enc = encode(basis, p)
    foot_idx, foot_w = (cell_weights(grid, p) if grid is not None
                        else (None, None))
    state = AdamState.init(params, lr=cfg.lr)  # fresh moments for the new loss
    M = len(targets)
    trace: list[float] = []
    snapshot = None
    for t in range(cfg.T):
        if grid is not None:
            alpha = interp_alpha_at(grid, schedule, foot_idx, foot_w)
            feats = alpha * enc
        else:
            feats = enc * alpha0[None, :]
        y, cache = mlp_forward(params, feats)

        # pairwise squared distances output x target (gemm form)
        yy = (y ** 2).sum(axis=1)[:, None]
        qq = (targets ** 2).sum(axis=1)[None, :]
        d2 = np.maximum(yy + qq - 2.0 * (y @ targets.T), 0.0)
        nn_out = d2.argmin(axis=1)          # nearest target per vertex
        nn_tgt = d2.argmin(axis=0)          # nearest vertex per target
        per_vertex = d2[np.arange(K), nn_out]
        loss = float(per_vertex.mean() + d2[nn_tgt, np.arange(M)].mean())
        if not np.isfinite(loss):
            raise TrainingDiverged("non-finite loss", t)
        trace.append(loss)

        d_out = (2.0 / K) * (y - targets[nn_out])
        np.add.at(d_out, nn_tgt, (2.0 / M) * (y[nn_tgt] - targets))
        grads = mlp_backward(params, cache, d_out)
        adam_step(params, grads, state)

        if grid is not None:
            accumulate_at(grid, foot_idx, foot_w, per_vertex)
            if (t + 1) % cfg.feedback_interval == 0:
                advance(grid)
            if t + 1 == cfg.T // 2:
                snapshot = grid.clocks.copy()
        if on_iteration is not None:
            on_iteration(t, params, loss, grid)

    out = predict(params, basis, grid, schedule, p)
    chamfer = chamfer_symmetric(out, targets)
    both = np.vstack([out, targets])
    span = both.max(axis=0) - both.min(axis=0)
    w0 = both.min(axis=0) - 0.03 * span
    w1 = both.max(axis=0) + 0.03 * span
    window = ((w0[0], w0[1]), (w1[0], w1[1]))
    pred_raster = rasterize_polygon(out, cfg.raster_resolution, window)
    tgt_raster = rasterize_polygon(targets, cfg.raster_resolution, window)
    iou_val = iou(pred_raster, tgt_raster)

    report = TrainReport(
        config=asdict(cfg),
        metrics=[
            MetricResult("chamfer", chamfer, "curve samples vs target points"),
            MetricResult("iou", iou_val,
                         f"rasterized at {cfg.raster_resolution}^2"),
            MetricResult("calibration_mse", calibration_mse, "unit circle"),
        ],
        loss_trace=trace, wall_time_s=time.perf_counter() - t0,
        params=params, grid=grid, schedule=schedule, basis=basis,
        heatmap=heatmap(grid, schedule) if grid is not None else None,
        clock_snapshot_mid=snapshot,
        output_points=out, target_kind="points", target_payload=targets,
    )
    return report


# ------------------------------------------------------------------ occupancy

def occupancy_dataset(shape, cfg: TrainConfig) -> SignalDataset:
    """Training points in 3 equal groups: uniform in the box, surface with
    Gaussian noise 0.1, surface with noise 0.01."""
    d = shape.d
    rng = np.random.default_rng(cfg.seed + 3)
    n3 = cfg.occupancy_samples // 3
    uniform = rng.uniform(-1, 1, size=(n3, d))
    near1 = shape.sample_surface(n3, rng) + rng.normal(0, 0.1, size=(n3, d))
    near2 = shape.sample_surface(n3, rng) + rng.normal(0, 0.01, size=(n3, d))
    pts = np.vstack([uniform, near1, near2])
    labels = shape.contains(pts).astype(np.float64)[:, None]
    return SignalDataset(coords=pts, targets=labels,
                         train_mask=np.ones(len(pts), dtype=bool),
                         lo=-1.0, hi=1.0, output_activation="sigmoid")


def evaluate_occupancy(shape, params, basis, grid, schedule,
                       seed: int, eval_points: int = 10_000):
    """IoU on fresh uniform + near-surface samples, plus the far-field
    false-positive rate on empty space."""
    d = shape.d
    rng = np.random.default_rng(seed + 4)
    uniform = rng.uniform(-1, 1, size=(eval_points, d))
    near = (shape.sample_surface(eval_points, rng)
            + rng.normal(0, 0.1, size=(eval_points, d)))

    def classify(points):
        return predict(params, basis, grid, schedule, points)[:, 0] > 0.5

    pred_u, true_u = classify(uniform), shape.contains(uniform)
    pred_n, true_n = classify(near), shape.contains(near)
    iou_u = iou(pred_u, true_u)
    iou_n = iou(pred_n, true_n)

    far = (~true_u) & (shape.distance_to_surface(uniform) > 0.1)
    fp = float(pred_u[far].mean()) if far.any() else 0.0
    return iou_u, iou_n, fp


def fit_occupancy(config: TrainConfig, shape, *, on_iteration=None) -> TrainReport:
    """Binary occupancy fit of a watertight shape with per-sample feedback."""
    dataset = occupancy_dataset(shape, config)
    params, grid, report = train(config, dataset, on_iteration=on_iteration)
    iou_u, iou_n, fp = evaluate_occupancy(
        shape, params, report.basis, grid, report.schedule,
        seed=report.config["seed"])
    support = "1e4 uniform + 1e4 near-surface (noise 0.1)"
    report.metrics = [
        MetricResult("iou", (iou_u + iou_n) / 2.0, support),
        MetricResult("iou_uniform", iou_u, "1e4 uniform samples"),
        MetricResult("iou_near_surface", iou_n, "1e4 near-surface samples"),
        MetricResult("fp_far_field", fp,
                     "uniform outside samples >0.1 from the surface"),
    ]
    if shape.d == 2:
        # midline raster of the predicted field for inspection
        res = 256
        xs = (np.arange(res) + 0.5) / res * 2 - 1
        gx, gy = np.meshgrid(xs, xs)
        pred = predict(params, report.basis, grid, report.schedule,
                       np.stack([gx.ravel(), gy.ravel()], axis=1))
        report.output_image = pred[:, 0].reshape(res, res)
        report.target_kind = "polygon"
        report.target_payload = shape.vertices
    return report


# ------------------------------------------------------------------ sweeps

def sweep_sigma(base: TrainConfig, image: np.ndarray, values) -> dict:
    """fit_image at each frequency scale, with and without progression."""
    out = {"sigma": list(values), "sape_psnr": [], "static_psnr": []}
    for s in values:
        for sape_on, key in ((True, "sape_psnr"), (False, "static_psnr")):
            cfg = replace(base, sigma=float(s), sape_enabled=sape_on)
            out[key].append(fit_image(cfg, image).metric("psnr"))
    return out


def sweep_grid(base: TrainConfig, image: np.ndarray, resolutions) -> dict:
    """fit_image at each spatial grid resolution."""
    out = {"resolution": [int(r) for r in resolutions], "psnr": []}
    for r in resolutions:
        cfg = replace(base, grid_resolution=(int(r), int(r)),
                      spatial_enabled=True, sape_enabled=True)
        out["psnr"].append(fit_image(cfg, image).metric("psnr"))
    return out
