"""Differential rolling-shutter geometry.

Everything here follows one small-motion model. The camera moves between the
first scanlines of two consecutive frames with translational velocity v and
rotational velocity omega (per frame interval). A scanline exposed at
normalized time t carries the interpolated pose weight

    lam(t) = (t + (k/2) t^2) * 2 / (k + 2)

where k is the acceleration shape parameter (k = 0 gives lam = t, constant
velocity) and the normalization keeps the pose weight difference between the
two first scanlines (t = 0 and t = 1) at exactly 1 for every k. Scanline s of
frame j sits at t = (j - 1) + gamma * s / h, with gamma the readout ratio and
h the image height in rows.

For a pixel at offset (x, y) from the principal point seeing depth Z, the
instantaneous image motion per unit pose weight is the classic differential
field

    pi = A(x, y) v / Z + B(x, y) omega

so any displacement between two pose weights lam_a -> lam_b is
(lam_b - lam_a) * pi to first order. Optical flow, undistortion flow, the
correlation map tying them together, and cross-scanline propagation are all
scalar multiples of pi built from such weight differences; this module keeps
the scalar algebra in forms that avoid catastrophic cancellation so the
constant-velocity reductions are exact in floating point.

Backward-direction quantities use the negated motion and negated readout
ratio; callers always pass the forward inter-frame motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import (
    CameraModel,
    Direction,
    MotionState,
    RsTiming,
    PROPAGATION_POLE_GUARD,
    SINGULARITY_GUARD_SCALE,
    signed_gamma,
)
from .errors import (
    DegenerateAcceleration,
    DimensionMismatch,
    InterpolationSingularity,
    NonPositiveDepth,
    WrongTargetScanline,
)
from .fields import CorrelationMap, DepthMap, FlowField, FlowKind


# ---------------------------------------------------------------------------
# pixel coordinates


def pixel_offsets(camera: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Return (x, y) offsets from the principal point for the full grid.

    Shapes are broadcast-friendly: x is (1, w), y is (h, 1).
    """
    cx, cy = camera.principal_point
    x = np.arange(camera.width, dtype=np.float64)[None, :] - cx
    y = np.arange(camera.height, dtype=np.float64)[:, None] - cy
    return x, y


# ---------------------------------------------------------------------------
# motion field


def motion_field(
    camera: CameraModel,
    v: np.ndarray,
    omega: np.ndarray,
    pixel: np.ndarray,
    depth,
) -> np.ndarray:
    """Instantaneous image motion A v / Z + B omega at the given pixels.

    Arguments:
        pixel: absolute pixel coordinates, shape (..., 2).
        depth: scene depth at those pixels, broadcastable to pixel[..., 0].

    Returns the per-unit-pose-weight motion (..., 2) in pixels. Raises
    NonPositiveDepth if any depth is <= 0; dense callers that want masking
    must sanitize first.
    """
    pixel = np.asarray(pixel, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(depth <= 0):
        raise NonPositiveDepth("motion field needs strictly positive depth")
    v = np.asarray(v, dtype=np.float64).reshape(3)
    omega = np.asarray(omega, dtype=np.float64).reshape(3)

    f = camera.focal_length
    cx, cy = camera.principal_point
    x = pixel[..., 0] - cx
    y = pixel[..., 1] - cy

    pi_u = (-f * v[0] + x * v[2]) / depth
    pi_v = (-f * v[1] + y * v[2]) / depth
    pi_u = pi_u + (x * y / f) * omega[0] - (f + x * x / f) * omega[1] + y * omega[2]
    pi_v = pi_v + (f + y * y / f) * omega[0] - (x * y / f) * omega[1] - x * omega[2]
    return np.stack([pi_u, pi_v], axis=-1)


def _motion_field_grid(
    camera: CameraModel,
    v: np.ndarray,
    omega: np.ndarray,
    depth: DepthMap,
    direction: Direction,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense motion field over the full grid with direction adjustment.

    Invalid depths are replaced by 1.0 before evaluation and reported via the
    returned mask. Returns (pi_u, pi_v, valid)."""
    if (depth.height, depth.width) != (camera.height, camera.width):
        raise DimensionMismatch(
            f"depth grid {depth.data.shape} does not match camera "
            f"{camera.height}x{camera.width}"
        )
    if direction is Direction.BACKWARD:
        v, omega = -np.asarray(v, np.float64), -np.asarray(omega, np.float64)
    x, y = pixel_offsets(camera)
    z = np.where(depth.valid, depth.data, 1.0)
    f = camera.focal_length
    v = np.asarray(v, dtype=np.float64).reshape(3)
    omega = np.asarray(omega, dtype=np.float64).reshape(3)

    pi_u = (-f * v[0] + x * v[2]) / z
    pi_v = (-f * v[1] + y * v[2]) / z
    pi_u = pi_u + (x * y / f) * omega[0] - (f + x * x / f) * omega[1] + y * omega[2]
    pi_v = pi_v + (f + y * y / f) * omega[0] - (x * y / f) * omega[1] - x * omega[2]
    return pi_u, pi_v, depth.valid.copy()


# ---------------------------------------------------------------------------
# scanline time weights


def scanline_time_weight(frame: int, s, timing: RsTiming, camera: CameraModel,
                         k: float = 0.0):
    """Pose weight lam of scanline s in the given frame (1 or 2).

    Vectorized over s. k = 0 reduces exactly to the linear weight
    (frame - 1) + gamma * s / h.
    """
    if k == -2.0:
        raise DegenerateAcceleration("k = -2 makes the time weighting degenerate")
    if frame < 1:
        raise ValueError(f"frame index must be >= 1, got {frame}")
    s = np.asarray(s, dtype=np.float64)
    t = (frame - 1) + timing.gamma * s / camera.height
    lam = (t + 0.5 * k * t * t) * (2.0 / (k + 2.0))
    return lam if lam.ndim else float(lam)


def _weight_difference(frame: int, s_to, s_from, timing: RsTiming,
                       camera: CameraModel, k: float):
    """lam(s_to) - lam(s_from) within one frame, cancellation-free.

    Factoring the quadratic difference as
        (t_to - t_from) * (2 + k (t_to + t_from)) / (k + 2)
    keeps the small difference in a single subtraction of scanline indices,
    so k = 0 yields gamma * (s_to - s_from) / h to the last bit.
    """
    if k == -2.0:
        raise DegenerateAcceleration("k = -2 makes the time weighting degenerate")
    s_to = np.asarray(s_to, dtype=np.float64)
    s_from = np.asarray(s_from, dtype=np.float64)
    h = camera.height
    dt = timing.gamma * (s_to - s_from) / h
    tsum = 2.0 * (frame - 1) + timing.gamma * (s_to + s_from) / h
    return dt * ((2.0 + k * tsum) / (k + 2.0))


def relative_scanline_motion(
    s1, s2, motion: MotionState, timing: RsTiming, camera: CameraModel
) -> tuple[np.ndarray, np.ndarray]:
    """Relative pose (v, omega) between scanline s1 of frame 1 and s2 of frame 2."""
    w1 = scanline_time_weight(1, s1, timing, camera, motion.k)
    w2 = scanline_time_weight(2, s2, timing, camera, motion.k)
    scale = np.asarray(w2 - w1)[..., None]
    return scale * motion.v, scale * motion.omega


# ---------------------------------------------------------------------------
# flow scaling factors


def interpolation_factor(f_v, timing: RsTiming, camera: CameraModel,
                         direction: Direction):
    """Scale alpha turning the inter-frame motion field into optical flow.

    f_v is the vertical flow component (the scanline gap actually crossed).
    """
    g = signed_gamma(timing, direction)
    return 1.0 + g * np.asarray(f_v, dtype=np.float64) / camera.height


def rs_flow_closed_form(
    camera: CameraModel,
    v: np.ndarray,
    omega: np.ndarray,
    timing: RsTiming,
    pixel: np.ndarray,
    depth,
    direction: Direction = Direction.FORWARD,
) -> np.ndarray:
    """Optical flow between the RS frames, closed form in the motion field.

    Eliminating the flow/scanline coupling gives f = h / (h - g pi_v) * pi
    with g the signed readout ratio and pi the direction-adjusted motion
    field. Raises InterpolationSingularity if any pixel falls within the
    guard band of the denominator zero; use rs_flow_field for masked dense
    evaluation.
    """
    if direction is Direction.BACKWARD:
        v, omega = -np.asarray(v, np.float64), -np.asarray(omega, np.float64)
    pi = motion_field(camera, v, omega, pixel, depth)
    g = signed_gamma(timing, direction)
    h = camera.height
    denom = h - g * pi[..., 1]
    if np.any(np.abs(denom) <= SINGULARITY_GUARD_SCALE * h):
        raise InterpolationSingularity(
            "vertical motion reaches the readout singularity h - gamma*pi_v = 0"
        )
    return (h / denom)[..., None] * pi


def rs_flow_field(
    camera: CameraModel,
    v: np.ndarray,
    omega: np.ndarray,
    timing: RsTiming,
    depth: DepthMap,
    direction: Direction = Direction.FORWARD,
) -> FlowField:
    """Dense closed-form RS optical flow with per-pixel degeneracy masking."""
    pi_u, pi_v, valid = _motion_field_grid(camera, v, omega, depth, direction)
    g = signed_gamma(timing, direction)
    h = camera.height
    denom = h - g * pi_v
    singular = np.abs(denom) <= SINGULARITY_GUARD_SCALE * h
    denom = np.where(singular, 1.0, denom)
    scale = h / denom
    data = np.stack([scale * pi_u, scale * pi_v], axis=-1)
    data[singular] = 0.0
    return FlowField(
        data=data,
        kind=FlowKind.OPTICAL,
        direction=direction,
        valid=valid & ~singular,
    )


def undistortion_factor(
    s,
    eta,
    timing: RsTiming,
    camera: CameraModel,
    direction: Direction = Direction.FORWARD,
    k: float = 0.0,
):
    """Scale beta turning the motion field into undistortion flow.

    Maps a pixel on scanline eta of its RS frame onto the virtual GS canvas
    at scanline time s of the same frame. Forward works on frame 1; backward
    works on frame 2 and is expressed against the negated motion, hence the
    sign flip. k = 0 reduces exactly to +/- gamma (s - eta) / h.
    """
    if direction is Direction.FORWARD:
        return _weight_difference(1, s, eta, timing, camera, k)
    return _weight_difference(2, eta, s, timing, camera, k)


def undistortion_flow_from_geometry(
    camera: CameraModel,
    motion: MotionState,
    timing: RsTiming,
    depth: DepthMap,
    s: float,
    direction: Direction = Direction.FORWARD,
) -> FlowField:
    """Dense undistortion flow onto the GS canvas at scanline time s.

    depth is the RS frame's own depth map (frame 1 for FORWARD, frame 2 for
    BACKWARD). Invalid depths flow into the validity mask.
    """
    pi_u, pi_v, valid = _motion_field_grid(
        camera, motion.v, motion.omega, depth, direction
    )
    rows = np.arange(camera.height, dtype=np.float64)
    beta = undistortion_factor(s, rows, timing, camera, direction, motion.k)
    beta = np.asarray(beta)[:, None]
    data = np.stack([beta * pi_u, beta * pi_v], axis=-1)
    data[~valid] = 0.0
    return FlowField(
        data=data,
        kind=FlowKind.UNDISTORTION,
        direction=direction,
        target_scanline=float(s),
        valid=valid,
    )


# ---------------------------------------------------------------------------
# correlation between optical flow and undistortion flow


def correlation_factor(
    s,
    eta,
    timing: RsTiming,
    camera: CameraModel,
    pi_v,
    direction: Direction = Direction.FORWARD,
):
    """Per-pixel scale c with undistortion = c * optical flow.

    pi_v is the vertical component of the direction-adjusted motion field at
    the pixel. Constant-velocity model only.
    """
    g = signed_gamma(timing, direction)
    h = camera.height
    s = np.asarray(s, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    pi_v = np.asarray(pi_v, dtype=np.float64)
    return g * (s - eta) * (h - g * pi_v) / (h * h)


def correlation_map_from_geometry(
    camera: CameraModel,
    v: np.ndarray,
    omega: np.ndarray,
    timing: RsTiming,
    depth: DepthMap,
    s: float,
    direction: Direction = Direction.FORWARD,
) -> CorrelationMap:
    """Dense correlation map for the GS canvas at scanline time s."""
    _, pi_v, valid = _motion_field_grid(camera, v, omega, depth, direction)
    rows = np.arange(camera.height, dtype=np.float64)[:, None]
    data = correlation_factor(s, rows, timing, camera, pi_v, direction)
    return CorrelationMap(
        data=data, target_scanline=float(s), direction=direction, valid=valid
    )


def correlation_map_from_flow(
    flow: FlowField, s: float, timing: RsTiming
) -> CorrelationMap:
    """Correlation map for target scanline s from an observed optical flow.

    The motion field never needs to be known: with alpha = 1 + g f_v / h the
    vertical motion is pi_v = f_v / alpha, and substituting into the
    correlation factor gives h - g pi_v = h^2 / (h + g f_v), so

        c = g (s - eta) / (h + g f_v)

    per pixel, from the observed vertical flow alone. Pixels where h + g f_v
    falls inside the singularity guard are marked invalid (their flow crossed
    the readout singularity).
    """
    if flow.kind is not FlowKind.OPTICAL:
        raise DimensionMismatch("correlation_map_from_flow expects an optical flow")
    h = float(flow.height)
    g = timing.gamma if flow.direction is Direction.FORWARD else -timing.gamma
    eta = np.arange(flow.height, dtype=np.float64)[:, None]
    denom = h + g * flow.v
    singular = np.abs(denom) <= SINGULARITY_GUARD_SCALE * h
    denom = np.where(singular, 1.0, denom)
    data = g * (float(s) - eta) / denom
    data[singular] = 0.0
    return CorrelationMap(
        data=data,
        target_scanline=float(s),
        direction=flow.direction,
        valid=flow.valid & ~singular,
    )


def undistortion_from_flow(flow: FlowField, corr: CorrelationMap) -> FlowField:
    """Scale an optical flow field by a correlation map (undistortion flow)."""
    if flow.kind is not FlowKind.OPTICAL:
        raise DimensionMismatch("undistortion_from_flow expects an optical flow")
    if flow.data.shape[:2] != corr.data.shape:
        raise DimensionMismatch(
            f"flow grid {flow.data.shape[:2]} does not match "
            f"correlation grid {corr.data.shape}"
        )
    if flow.direction is not corr.direction:
        raise DimensionMismatch("flow and correlation map disagree on direction")
    data = flow.data * corr.data[..., None]
    return FlowField(
        data=data,
        kind=FlowKind.UNDISTORTION,
        direction=flow.direction,
        target_scanline=corr.target_scanline,
        valid=flow.valid & corr.valid,
    )


# ---------------------------------------------------------------------------
# propagation between target scanlines


def propagate(
    flow: FlowField,
    s2: float,
    camera: CameraModel,
    phi: float | None = None,
) -> FlowField:
    """Rescale an undistortion flow from its target scanline s1 to s2.

    With phi None or exactly 0 the constant-velocity ratio
    (s2 - eta) / (s1 - eta) is used (and the result at phi = 0 is bitwise the
    velocity result). Otherwise the quadratic time interpolation with
    phi = k * gamma gives

        (s2 - eta)(2h + phi (s2 + eta)) / ((s1 - eta)(2h + phi (s1 + eta)))

    which telescopes exactly across chained propagations. Pixels on rows
    within the pole guard of s1 (or where the quadratic weighting vanishes)
    cannot be rescaled and are marked invalid rather than raising.
    """
    if flow.kind is not FlowKind.UNDISTORTION:
        raise DimensionMismatch("propagate expects an undistortion flow")
    s1 = float(flow.target_scanline)
    s2 = float(s2)
    if s2 == s1:
        return FlowField(
            data=flow.data.copy(),
            kind=flow.kind,
            direction=flow.direction,
            target_scanline=s1,
            valid=flow.valid.copy(),
        )

    eta = np.arange(camera.height, dtype=np.float64)
    d1 = s1 - eta
    pole = np.abs(d1) <= PROPAGATION_POLE_GUARD
    d1 = np.where(pole, 1.0, d1)

    if phi is None or phi == 0.0:
        ratio = (s2 - eta) / d1
    else:
        h2 = 2.0 * camera.height
        num_w = h2 + phi * (s2 + eta)
        den_w = h2 + phi * (s1 + eta)
        deg = np.abs(den_w) <= PROPAGATION_POLE_GUARD * h2
        pole = pole | deg
        den_w = np.where(deg, 1.0, den_w)
        ratio = (s2 - eta) * num_w / (d1 * den_w)

    data = flow.data * ratio[:, None, None]
    valid = flow.valid & ~pole[:, None]
    data[~valid] = 0.0
    return FlowField(
        data=data,
        kind=FlowKind.UNDISTORTION,
        direction=flow.direction,
        target_scanline=s2,
        valid=valid,
    )


# ---------------------------------------------------------------------------
# correlation bound validation


@dataclass
class CorrelationBoundsReport:
    """Outcome of validate_correlation_bounds."""

    violations: int
    rows: list
    checked: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def validate_correlation_bounds(
    corr: CorrelationMap, strict: bool = True
) -> CorrelationBoundsReport:
    """Check the sign/bound structure of a middle-scanline correlation map.

    For the forward map, rows above the middle must have c in (0, 1), the
    middle row exactly 0, rows below in (-1, 0); the backward map mirrors
    the signs. strict=True uses the open intervals literally (an off-middle
    zero counts as a violation); strict=False relaxes to closed intervals.
    Only valid pixels are checked.
    """
    h = corr.height
    middle = h / 2.0
    if corr.target_scanline != middle:
        raise WrongTargetScanline(
            f"bounds are defined for the middle scanline {middle}, "
            f"map targets {corr.target_scanline}"
        )

    rows = np.arange(h, dtype=np.float64)[:, None]
    c = corr.data
    if corr.direction is Direction.FORWARD:
        upper, lower = c, -c  # upper rows positive, lower rows negative
    else:
        upper, lower = -c, c

    if strict:
        bad_above = (upper <= 0.0) | (upper >= 1.0)
        bad_below = (lower <= 0.0) | (lower >= 1.0)
    else:
        bad_above = (upper < 0.0) | (upper > 1.0)
        bad_below = (lower < 0.0) | (lower > 1.0)
    bad_middle = c != 0.0

    bad = np.where(
        rows < middle, bad_above, np.where(rows > middle, bad_below, bad_middle)
    )
    bad = bad & corr.valid
    row_hits = np.flatnonzero(bad.any(axis=1))
    return CorrelationBoundsReport(
        violations=int(bad.sum()),
        rows=row_hits.tolist(),
        checked=int(corr.valid.sum()),
    )
