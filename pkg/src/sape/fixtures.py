"""Synthetic inputs used by the tests and handy for demos.

All fixtures are deterministic and live in the task domains: images on
pixel grids, signals on [0, 1], shapes inside the [-1, 1] box.
"""

from __future__ import annotations

import numpy as np

from .shapes import polyline_arclength_points


def two_tone_image(size: int = 64, block: int = 4, low: float = 0.15,
                   high: float = 0.85, softness: float = 3.0) -> np.ndarray:
    """Grayscale image: smooth gradient left half, fine checkerboard right.

    The checker cells have a tanh-softened edge so the pattern stays
    band-limited below the Nyquist rate of the stride-2 training lattice;
    hard steps would make unseen edge pixels unrecoverable for every
    encoding and mask any quality difference.
    """
    img = np.empty((size, size))
    half = size // 2
    i = np.arange(size)
    ramp = low + (high - low) * (i[:, None] + i[None, :half]) / (size + half - 2)
    img[:, :half] = ramp
    s = np.sin(np.pi * (i[:, None] + 0.5) / block) * \
        np.sin(np.pi * (i[None, half:] + 0.5) / block)
    mid, amp = (high + low) / 2, (high - low) / 2
    img[:, half:] = mid + amp * np.tanh(softness * s) / np.tanh(softness)
    return img


def constant_image(size: int = 32, value: float = 0.42,
                   channels: int = 1) -> np.ndarray:
    if channels == 1:
        return np.full((size, size), value)
    return np.full((size, size, channels), value)


def piecewise_signal(x: np.ndarray) -> np.ndarray:
    """Low-frequency sine on [0, 0.5), chirp sweeping ~10 to ~60 Hz after."""
    x = np.asarray(x, dtype=np.float64)
    left = 0.5 + 0.4 * np.sin(4 * np.pi * x)
    u = x - 0.5
    right = 0.5 + 0.4 * np.sin(2 * np.pi * (10 * u + 50 * u ** 2))
    return np.where(x < 0.5, left, right)


def low_freq_signal(x: np.ndarray) -> np.ndarray:
    return 0.5 + 0.4 * np.sin(2 * np.pi * np.asarray(x) )


def circle_points(count: int = 512, radius: float = 1.0) -> np.ndarray:
    t = 2 * np.pi * np.arange(count) / count
    return radius * np.stack([np.cos(t), np.sin(t)], axis=1)


def square_outline(count: int = 512, half: float = 0.7) -> np.ndarray:
    corners = np.array([[-half, -half], [half, -half], [half, half],
                        [-half, half]])
    return polyline_arclength_points(corners, count)


def star_outline(count: int = 512, points: int = 5, r_outer: float = 0.85,
                 r_inner: float = 0.38) -> np.ndarray:
    k = 2 * points
    t = 2 * np.pi * np.arange(k) / k + np.pi / 2
    r = np.where(np.arange(k) % 2 == 0, r_outer, r_inner)
    corners = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
    return polyline_arclength_points(corners, count)


def gear_polygon(teeth: int = 16, r_base: float = 0.55, amplitude: float = 0.12,
                 steps_per_tooth: int = 12) -> np.ndarray:
    """Square-toothed gear outline (polygon vertices, counterclockwise)."""
    n = teeth * steps_per_tooth
    t = 2 * np.pi * np.arange(n) / n
    r = r_base + amplitude * np.sign(np.sin(teeth * t))
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def gear_outline(count: int = 720, teeth: int = 12, r_base: float = 0.6,
                 amplitude: float = 0.12) -> np.ndarray:
    """Gear boundary resampled uniformly by arclength (silhouette target)."""
    poly = gear_polygon(teeth=teeth, r_base=r_base, amplitude=amplitude,
                        steps_per_tooth=24)
    return polyline_arclength_points(poly, count)
