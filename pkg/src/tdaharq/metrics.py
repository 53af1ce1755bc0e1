"""PSNR and multi-scale SSIM for 8-bit images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .imageio import to_grayscale

PSNR_CAP = 100.0
MS_SSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 255.0


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ms_ssim: float


def _check_pair(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR over all channels in dB; identical images give ``PSNR_CAP``."""
    a, b = _check_pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(DATA_RANGE ** 2 / mse), PSNR_CAP))


def _gaussian_window(size=WINDOW, sigma=SIGMA):
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_terms(x, y, window):
    c1, c2 = (K1 * DATA_RANGE) ** 2, (K2 * DATA_RANGE) ** 2
    filt = lambda z: convolve2d(z, window, mode="valid")
    mu_x, mu_y = filt(x), filt(y)
    sxx = filt(x * x) - mu_x ** 2
    syy = filt(y * y) - mu_y ** 2
    sxy = filt(x * y) - mu_x * mu_y
    cs = (2 * sxy + c2) / (sxx + syy + c2)
    lum = (2 * mu_x * mu_y + c1) / (mu_x ** 2 + mu_y ** 2 + c1)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def n_scales(shape, window: int = WINDOW, max_scales: int = 5) -> int:
    """Scales that keep the coarsest image at least one window wide."""
    side = min(shape[:2])
    if side < window:
        return 0
    n = 1
    while n < max_scales and side // 2 ** n >= window:
        n += 1
    return n


def ms_ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Multi-scale SSIM on BT.601 luma; fewer than 5 scales on small images.

    The weights of the scales in use are renormalized to sum to 1. Negative
    contrast-structure terms are clipped at 0 so the result stays in [0, 1].
    Images smaller than the window fall back to a single global SSIM.
    """
    a, b = _check_pair(a, b)
    x = to_grayscale(a) if a.ndim == 3 else a
    y = to_grayscale(b) if b.ndim == 3 else b
    if np.array_equal(x, y):
        return 1.0
    scales = n_scales(x.shape)
    if scales == 0:
        window = np.full(x.shape, 1.0 / x.size)
        return float(np.clip(_ssim_terms(x, y, window)[0], 0.0, 1.0))
    weights = MS_SSIM_WEIGHTS[:scales] / MS_SSIM_WEIGHTS[:scales].sum()
    window = _gaussian_window()
    value = 1.0
    for level in range(scales):
        ssim, cs = _ssim_terms(x, y, window)
        term = ssim if level == scales - 1 else cs
        value *= max(term, 0.0) ** weights[level]
        if level < scales - 1:
            h, w = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
            x = x[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
            y = y[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    return float(np.clip(value, 0.0, 1.0))


def quality(a: np.ndarray, b: np.ndarray) -> QualityReport:
    return QualityReport(psnr(a, b), ms_ssim(a, b))
