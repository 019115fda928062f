"""Forward splatting and backward warping.

Forward splatting scatters each source pixel to the four destination
neighbors of x + u with bilinear masses, blending collisions by a softmax
over per-pixel importance (so at high sharpness the most important
contributor wins, and at sharpness near zero the blend tends to the plain
mass-weighted average). Accumulation runs in float64 regardless of the
source dtype, and the implementation is single-pass numpy, so results are
deterministic and independent of any thread configuration.

Backward warping is the verification-side inverse: bilinear sampling of the
source at x + u with clamp-to-edge behavior and a companion in-bounds mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DimensionMismatch, MissingReference, NonPositiveDepth
from .fields import FlowField, FlowKind

SPLAT_MASS_EPSILON = 1e-6


class WeightMode(Enum):
    UNIFORM = "uniform"
    INVERSE_DEPTH = "inverse_depth"
    BRIGHTNESS = "brightness"


class HolePolicy(Enum):
    MARK_INVALID = "mark_invalid"
    NEAREST_FILL = "nearest_fill"


@dataclass(frozen=True)
class SplatConfig:
    weight_mode: WeightMode = WeightMode.UNIFORM
    sharpness: float = 10.0
    hole_policy: HolePolicy = HolePolicy.MARK_INVALID

    def __post_init__(self):
        if self.sharpness <= 0:
            raise ValueError(f"sharpness must be positive, got {self.sharpness}")


def _check_image(src: np.ndarray, flow: FlowField) -> np.ndarray:
    src = np.asarray(src, dtype=np.float64)
    if src.ndim == 2:
        src = src[..., None]
    if src.ndim != 3 or src.shape[:2] != (flow.height, flow.width):
        raise DimensionMismatch(
            f"image shape {src.shape} does not match flow grid "
            f"{flow.height}x{flow.width}"
        )
    return src


def _importance(
    config: SplatConfig, weights: np.ndarray | None, shape: tuple
) -> np.ndarray:
    if config.weight_mode is WeightMode.UNIFORM:
        return np.zeros(shape)
    if weights is None:
        raise MissingReference(
            f"weight mode {config.weight_mode.value} needs a per-pixel weights array"
        )
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != shape:
        raise DimensionMismatch(
            f"weights shape {weights.shape} does not match flow grid {shape}"
        )
    if config.weight_mode is WeightMode.INVERSE_DEPTH:
        if np.any(weights <= 0):
            raise NonPositiveDepth("inverse-depth weighting needs positive depth")
        return 1.0 / weights
    return weights  # BRIGHTNESS: caller-supplied importance


def _corner_accumulate(flow: FlowField, values: list, out: list) -> None:
    """Scatter each value array bilinearly along the flow into its out array."""
    h, w = flow.height, flow.width
    xs = np.arange(w, dtype=np.float64)[None, :] + flow.u
    ys = np.arange(h, dtype=np.float64)[:, None] + flow.v
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    for dy in (0, 1):
        for dx in (0, 1):
            gx = x0 + dx
            gy = y0 + dy
            mass = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            ok = flow.valid & (gx >= 0) & (gx < w) & (gy >= 0) & (gy < h)
            idx = (gy[ok], gx[ok])
            m = mass[ok]
            for value, target in zip(values, out):
                if value.ndim == 3:
                    np.add.at(target, idx, m[:, None] * value[ok])
                else:
                    np.add.at(target, idx, m * value[ok])


def splat_mass(flow: FlowField) -> np.ndarray:
    """Accumulated bilinear coverage mass of the valid source pixels.

    Diagnostic: with every destination in bounds the total equals the count
    of valid source pixels exactly (bilinear masses sum to 1 per source).
    """
    ones = np.ones((flow.height, flow.width))
    mass = np.zeros((flow.height, flow.width))
    _corner_accumulate(flow, [ones], [mass])
    return mass


def splat_forward(
    src: np.ndarray,
    flow: FlowField,
    weights: np.ndarray | None = None,
    config: SplatConfig = SplatConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Softmax-splat src along an undistortion flow. Returns (image, valid).

    weights supplies the per-pixel importance input: depth for
    INVERSE_DEPTH (nearer wins), a caller-computed importance for
    BRIGHTNESS; UNIFORM ignores it. The returned validity mask is False
    where no source mass landed; with HolePolicy.NEAREST_FILL those pixels
    are filled from their nearest valid neighbor but stay masked, so metrics
    can still exclude them.
    """
    if flow.kind is not FlowKind.UNDISTORTION:
        raise DimensionMismatch("splat_forward expects an undistortion flow")
    src = _check_image(src, flow)
    importance = _importance(config, weights, (flow.height, flow.width))
    # a global shift of importance cancels per destination, so stabilize once
    exp_w = np.exp(config.sharpness * (importance - importance.max()))

    channels = src.shape[2]
    num = np.zeros((flow.height, flow.width, channels))
    den = np.zeros((flow.height, flow.width))
    _corner_accumulate(flow, [exp_w[..., None] * src, exp_w], [num, den])

    valid = den > SPLAT_MASS_EPSILON
    out = np.zeros_like(num)
    out[valid] = num[valid] / den[valid, None]

    fill = config.hole_policy is HolePolicy.NEAREST_FILL
    if fill and valid.any() and not valid.all():
        idx = distance_transform_edt(
            ~valid, return_distances=False, return_indices=True
        )
        out = out[idx[0], idx[1]]
    return (out[..., 0] if channels == 1 else out), valid


def backward_warp(src: np.ndarray, flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear backward warp: out(x) = src(x + flow(x)). Returns (image, mask).

    Samples falling outside the source are clamped to the edge and flagged
    False in the mask, as are pixels whose flow is itself invalid.
    """
    src = _check_image(src, flow)
    h, w = flow.height, flow.width
    xs = np.arange(w, dtype=np.float64)[None, :] + flow.u
    ys = np.arange(h, dtype=np.float64)[:, None] + flow.v
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)

    cx = np.clip(xs, 0.0, w - 1.0)
    cy = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(cx).astype(np.int64)
    y0 = np.floor(cy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (cx - x0)[..., None]
    fy = (cy - y0)[..., None]
    out = (
        src[y0, x0] * (1 - fx) * (1 - fy)
        + src[y0, x1] * fx * (1 - fy)
        + src[y1, x0] * (1 - fx) * fy
        + src[y1, x1] * fx * fy
    )
    mask = inside & flow.valid
    return (out[..., 0] if out.shape[2] == 1 else out), mask
