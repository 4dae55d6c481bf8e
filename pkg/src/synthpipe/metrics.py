"""Pixel-space fidelity metrics: MSE, PSNR, and Gaussian-windowed SSIM.

PSNR is 10*log10(bit_depth_max^2 / mse) and returns +inf for identical
images. SSIM follows the classic single-scale formulation: an 11x11 Gaussian
window (sigma 1.5) slides over the luma plane, local statistics are computed
only where the window fits entirely inside the image (valid region), and the
per-window map is averaged. Color images are reduced to luma with BT.601
weights before windowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

__all__ = ["MetricParams", "mse", "psnr", "ssim", "to_luma"]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class MetricParams:
    bit_depth_max: float = 255.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self) -> None:
        if self.bit_depth_max <= 0:
            raise ValueError("bit_depth_max must be positive")
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise ValueError("ssim_window must be an odd integer >= 3")
        if self.ssim_sigma <= 0:
            raise ValueError("ssim_sigma must be positive")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise ValueError("images must be non-empty")
    return x, y


def mse(a, b) -> float:
    x, y = _as_pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr(a, b, params: MetricParams = MetricParams()) -> float:
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(params.bit_depth_max**2 / err)


def to_luma(image) -> np.ndarray:
    """Reduce an image to a 2-D luma plane; grayscale input passes through."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] == 3:
        r, g, b = LUMA_WEIGHTS
        return arr[:, :, 0] * r + arr[:, :, 1] * g + arr[:, :, 2] * b
    raise ValueError(f"unsupported image shape {arr.shape}")


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = (window - 1) / 2.0
    offsets = np.arange(window, dtype=np.float64) - half
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _windowed(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable Gaussian, valid mode only: no padding enters the statistics.
    rows = convolve2d(plane, kernel[np.newaxis, :], mode="valid")
    return convolve2d(rows, kernel[:, np.newaxis], mode="valid")


def ssim(a, b, params: MetricParams = MetricParams()) -> float:
    x, y = _as_pair(a, b)
    lx = to_luma(x)
    ly = to_luma(y)
    win = params.ssim_window
    if lx.shape[0] < win or lx.shape[1] < win:
        raise ValueError(f"images must be at least {win}x{win} for ssim")

    c1 = (params.k1 * params.bit_depth_max) ** 2
    c2 = (params.k2 * params.bit_depth_max) ** 2
    kernel = _gaussian_kernel(win, params.ssim_sigma)

    mu_x = _windowed(lx, kernel)
    mu_y = _windowed(ly, kernel)
    var_x = _windowed(lx * lx, kernel) - mu_x * mu_x
    var_y = _windowed(ly * ly, kernel) - mu_y * mu_y
    cov = _windowed(lx * ly, kernel) - mu_x * mu_y

    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(np.mean(ssim_map))
