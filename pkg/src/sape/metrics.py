"""Pure evaluation metrics: PSNR, IoU, symmetric Chamfer distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 100.0


@dataclass
class MetricResult:
    """A named metric value plus a description of its evaluation support."""

    name: str
    value: float
    support: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "support": self.support}


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(predicted: np.ndarray, reference: np.ndarray) -> float:
    """10*log10(1/MSE) over all pixels and channels, for values in [0, 1].

    Identical inputs give the 100 dB cap instead of infinity.
    """
    err = mse(predicted, reference)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / err), PSNR_CAP_DB))


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two boolean masks or label sets.

    Empty-vs-empty is defined as 1.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"support mismatch: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def _min_sq_dists(points: np.ndarray, targets: np.ndarray,
                  chunk: int = 512) -> np.ndarray:
    """Squared distance of each point to its nearest target, brute force.

    Per-pair distances are formed as sum((a-b)^2) so the values match a
    plain double loop bit for bit.
    """
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        block = points[s:s + chunk]
        d2 = ((block[:, None, :] - targets[None, :, :]) ** 2).sum(axis=2)
        out[s:s + chunk] = d2.min(axis=1)
    return out


def chamfer_symmetric(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Mean nearest-neighbor squared distance in both directions, summed."""
    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or len(a) == 0 or len(b) == 0:
        raise ValueError("point sets must be non-empty (m, d) arrays")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets must share a dimension")
    return float(np.mean(_min_sq_dists(a, b)) + np.mean(_min_sq_dists(b, a)))
