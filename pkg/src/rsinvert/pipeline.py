"""End-to-end inversion: an RS frame pair plus bidirectional optical flow in,
global-shutter frames at requested scanline times out.

Each direction is corrected against its own frame's timeline: the forward
path maps RS frame 1 onto the GS canvas at scanline time s of frame 1, the
backward path maps RS frame 2 onto scanline time s of frame 2. Under the
constant-velocity model the undistortion flow for any target comes straight
from the per-target correlation map (u = c * f); no intermediate anchor is
needed, and chaining through one would reproduce the same field (the
propagation ratio telescopes). The acceleration model is where anchoring
matters: the anchor map at the middle scanline is rescaled to the target by
the quadratic propagation ratio with the fitted phi. The single anchor-row
pole that rescaling cannot cross is filled from the constant-velocity map
for that row, a first-order patch on one scanline.

A requested phi of exactly 0 (or None) runs the constant-velocity code path
itself, so "acceleration with phi = 0" is bitwise the velocity output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, Direction, RsTiming
from .errors import DimensionMismatch
from .fields import DepthMap, FlowField
from .geometry import (
    correlation_map_from_flow,
    propagate,
    undistortion_from_flow,
)
from .warp import HolePolicy, SplatConfig, WeightMode, splat_forward


@dataclass(frozen=True)
class ScanlineResult:
    """Reconstruction of one GS scanline time from both RS frames."""

    scanline: float
    image1: np.ndarray
    valid1: np.ndarray
    image2: np.ndarray
    valid2: np.ndarray


def undistortion_map(
    flow: FlowField,
    s: float,
    timing: RsTiming,
    camera: CameraModel,
    phi: float | None = None,
) -> FlowField:
    """Undistortion flow onto scanline time s from observed optical flow.

    phi None or 0 selects the constant-velocity model (direct per-target
    correlation map). A nonzero phi anchors at the middle scanline and
    rescales with the quadratic propagation ratio.
    """
    if phi is None or phi == 0.0:
        return undistortion_from_flow(
            flow, correlation_map_from_flow(flow, s, timing)
        )
    m = camera.middle_scanline
    anchor = undistortion_from_flow(
        flow, correlation_map_from_flow(flow, m, timing)
    )
    moved = propagate(anchor, s, camera, phi)
    direct = undistortion_from_flow(flow, correlation_map_from_flow(flow, s, timing))
    need = ~moved.valid & direct.valid
    if not need.any():
        return moved
    data = np.where(need[..., None], direct.data, moved.data)
    return FlowField(
        data=data,
        kind=moved.kind,
        direction=moved.direction,
        target_scanline=moved.target_scanline,
        valid=moved.valid | need,
    )


def reconstruct_gs(
    rs: np.ndarray,
    flow: FlowField,
    s: float,
    timing: RsTiming,
    camera: CameraModel,
    phi: float | None = None,
    depth: DepthMap | None = None,
    sharpness: float = 10.0,
    fill_holes: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Splat one RS frame onto the GS canvas at scanline time s."""
    u = undistortion_map(flow, s, timing, camera, phi)
    if depth is not None:
        config = SplatConfig(
            weight_mode=WeightMode.INVERSE_DEPTH,
            sharpness=sharpness,
            hole_policy=HolePolicy.NEAREST_FILL if fill_holes else HolePolicy.MARK_INVALID,
        )
        return splat_forward(rs, u, depth.data, config)
    config = SplatConfig(
        weight_mode=WeightMode.UNIFORM,
        sharpness=sharpness,
        hole_policy=HolePolicy.NEAREST_FILL if fill_holes else HolePolicy.MARK_INVALID,
    )
    return splat_forward(rs, u, None, config)


def invert_pair(
    rs1: np.ndarray,
    rs2: np.ndarray,
    flow_fwd: FlowField,
    flow_bwd: FlowField,
    camera: CameraModel,
    timing: RsTiming,
    scanlines,
    phi1: float | None = None,
    phi2: float | None = None,
    depth1: DepthMap | None = None,
    depth2: DepthMap | None = None,
    sharpness: float = 10.0,
    fill_holes: bool = False,
) -> list:
    """Invert an RS pair to GS frames at each requested scanline time."""
    if flow_fwd.direction is not Direction.FORWARD:
        raise DimensionMismatch("flow_fwd must be a forward (frame 1 -> 2) flow")
    if flow_bwd.direction is not Direction.BACKWARD:
        raise DimensionMismatch("flow_bwd must be a backward (frame 2 -> 1) flow")

    results = []
    for s in scanlines:
        img1, valid1 = reconstruct_gs(
            rs1, flow_fwd, s, timing, camera, phi1, depth1, sharpness, fill_holes
        )
        img2, valid2 = reconstruct_gs(
            rs2, flow_bwd, s, timing, camera, phi2, depth2, sharpness, fill_holes
        )
        results.append(
            ScanlineResult(
                scanline=float(s),
                image1=img1,
                valid1=valid1,
                image2=img2,
                valid2=valid2,
            )
        )
    return results
