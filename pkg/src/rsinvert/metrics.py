"""Image quality metrics with mask support.

PSNR and SSIM operate on images of equal shape, either float arrays in [0, 1]
or uint8 arrays in [0, 255]; the peak value is inferred from the dtype. Both
are plain functions of the pixel data, computed in float64.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionMismatch, EmptyMask

PSNR_CAP_DB = 99.0


def _as_float(image: np.ndarray) -> tuple[np.ndarray, float]:
    """Convert an image to float64 and return (data, peak value)."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64), 255.0
    return arr.astype(np.float64), 1.0


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB, capped at 99 dB for identical inputs.

    mask, if given, selects the pixels entering the mean squared error; for
    multi-channel images it covers all channels of the selected pixels.
    """
    fa, peak_a = _as_float(a)
    fb, peak_b = _as_float(b)
    if fa.shape != fb.shape:
        raise DimensionMismatch(f"psnr shapes differ: {fa.shape} vs {fb.shape}")
    peak = max(peak_a, peak_b)
    err = (fa - fb) ** 2
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != fa.shape[: mask.ndim]:
            raise DimensionMismatch(
                f"mask shape {mask.shape} does not match image {fa.shape}"
            )
        if not mask.any():
            raise EmptyMask("psnr mask selects no pixels")
        err = err[mask]
    mse = float(err.mean())
    if mse == 0.0:
        return PSNR_CAP_DB
    value = 10.0 * np.log10(peak * peak / mse)
    return float(min(value, PSNR_CAP_DB))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = correlate1d(img, kernel, axis=0, mode="reflect")
    return correlate1d(out, kernel, axis=1, mode="reflect")


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    window: int = 11,
    k1: float = 0.01,
    k2: float = 0.03,
    sigma: float = 1.5,
) -> float:
    """Mean structural similarity with a Gaussian-weighted window.

    Windows whose support would extend past the border are excluded from the
    mean (only fully interior windows count). Multi-channel images are scored
    per channel and averaged. Exactly symmetric in (a, b).
    """
    fa, peak_a = _as_float(a)
    fb, peak_b = _as_float(b)
    if fa.shape != fb.shape:
        raise DimensionMismatch(f"ssim shapes differ: {fa.shape} vs {fb.shape}")
    if window % 2 != 1 or window < 3:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if fa.shape[0] < window or fa.shape[1] < window:
        raise DimensionMismatch(
            f"image {fa.shape[:2]} smaller than the {window}x{window} window"
        )
    peak = max(peak_a, peak_b)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    kernel = _gaussian_window(window, sigma)

    if fa.ndim == 2:
        fa = fa[..., None]
        fb = fb[..., None]

    half = window // 2
    scores = []
    for ch in range(fa.shape[2]):
        x = fa[..., ch]
        y = fb[..., ch]
        mu_x = _windowed_mean(x, kernel)
        mu_y = _windowed_mean(y, kernel)
        xx = _windowed_mean(x * x, kernel) - mu_x * mu_x
        yy = _windowed_mean(y * y, kernel) - mu_y * mu_y
        xy = _windowed_mean(x * y, kernel) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
        smap = num / den
        interior = smap[half:-half, half:-half]
        scores.append(float(interior.mean()))
    return float(np.mean(scores))
