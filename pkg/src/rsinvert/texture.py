"""Procedural reference textures for the plane simulator.

Textures are float64 RGB images in [0, 1] that tile periodically, so the
renderer can wrap-sample them without seams. The band-limited noise texture
is the workhorse: smooth enough for subpixel interpolation to stay accurate,
textured enough everywhere for flow and photometric checks.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def fourier_texture(
    height: int,
    width: int,
    seed: int = 0,
    cutoff_cycles: float = 8.0,
    rolloff: float = 4.0,
) -> np.ndarray:
    """Periodic band-limited RGB noise.

    Synthesized in the frequency domain: complex Gaussian coefficients shaped
    by a low-pass envelope 1 / (1 + (r / cutoff)^rolloff), where r is the
    radial frequency in cycles per image. Each channel is normalized to span
    [0.05, 0.95] so quantization and interpolation never clip.
    """
    if height < 2 or width < 2:
        raise ConfigError(f"texture size {width}x{height} too small")
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(height)[:, None] * height
    fx = np.fft.rfftfreq(width)[None, :] * width
    radius = np.hypot(fy, fx)
    envelope = 1.0 / (1.0 + (radius / cutoff_cycles) ** rolloff)
    envelope[0, 0] = 0.0  # DC handled by the per-channel normalization

    channels = []
    for _ in range(3):
        coeff = rng.standard_normal(radius.shape) + 1j * rng.standard_normal(
            radius.shape
        )
        img = np.fft.irfft2(envelope * coeff, s=(height, width))
        lo, hi = img.min(), img.max()
        channels.append((img - lo) / (hi - lo))
    return 0.05 + 0.9 * np.stack(channels, axis=-1)


def checker_texture(
    height: int, width: int, cells: int = 8, contrast: float = 0.8
) -> np.ndarray:
    """Periodic checkerboard; cells counts squares across the width."""
    if height < 2 or width < 2:
        raise ConfigError(f"texture size {width}x{height} too small")
    if cells < 1:
        raise ConfigError(f"cells must be >= 1, got {cells}")
    cell = max(1, width // cells)
    ys = (np.arange(height)[:, None] // cell) % 2
    xs = (np.arange(width)[None, :] // cell) % 2
    board = (ys ^ xs).astype(np.float64)
    gray = 0.5 + contrast * (board - 0.5)
    return np.repeat(gray[:, :, None], 3, axis=2)
