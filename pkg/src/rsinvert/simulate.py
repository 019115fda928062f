"""Plane-scene renderer: global-shutter views, rolling-shutter composition,
and ground-truth flow, depth, and occlusion.

The world frame is the reference camera (frame 1, scanline 0). A pose weight
lam places the camera at center lam * v with orientation given by the
rotation vector lam * omega; rays are cast per pixel, intersected with the
scene plane, and the hit points are projected back into the reference view
to sample the texture (backward sampling, so rendered frames have no holes).

Rolling-shutter frames and global-shutter frames share one row renderer that
takes a per-row pose-weight array, so row s of a composed RS frame is
bit-identical to row s of the GS frame rendered at scanline time s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Direction
from .errors import PlaneBehindCamera
from .fields import DepthMap, FlowField
from .geometry import (
    rs_flow_field,
    scanline_time_weight,
    undistortion_flow_from_geometry,
)
from .scene import Scene

OCCLUSION_MASS_THRESHOLD = 1e-3


@dataclass(frozen=True)
class GsFrame:
    """A rendered global-shutter view."""

    image: np.ndarray
    scanline_time: float
    depth: DepthMap
    pose_weight: float


@dataclass(frozen=True)
class RsFrame:
    """A composed rolling-shutter frame.

    occlusion_mask flags pixels the composition could not source; the plane
    covers every ray, so for this scene family it is always all-False and is
    kept for interface symmetry with the correction outputs.
    """

    image: np.ndarray
    frame_index: int
    occlusion_mask: np.ndarray
    depth: DepthMap


def _rotation_matrices(rotvecs: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices for a batch of rotation vectors (n, 3)."""
    rotvecs = np.asarray(rotvecs, dtype=np.float64)
    n = rotvecs.shape[0]
    theta = np.linalg.norm(rotvecs, axis=1)
    out = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    spin = theta > 0
    if not spin.any():
        return out
    axis = rotvecs[spin] / theta[spin, None]
    ax, ay, az = axis[:, 0], axis[:, 1], axis[:, 2]
    zero = np.zeros_like(ax)
    k = np.stack(
        [zero, -az, ay, az, zero, -ax, -ay, ax, zero], axis=1
    ).reshape(-1, 3, 3)
    sin = np.sin(theta[spin])[:, None, None]
    cos1 = (1.0 - np.cos(theta[spin]))[:, None, None]
    out[spin] = np.eye(3) + sin * k + cos1 * (k @ k)
    return out


def _sample_texture_periodic(texture: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Bilinear sample with wrap-around addressing (texture tiles the plane)."""
    h, w = texture.shape[:2]
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    fx = u - x0
    fy = v - y0
    x0 %= w
    y0 %= h
    x1 = (x0 + 1) % w
    y1 = (y0 + 1) % h
    wa = ((1.0 - fx) * (1.0 - fy))[..., None]
    wb = (fx * (1.0 - fy))[..., None]
    wc = ((1.0 - fx) * fy)[..., None]
    wd = (fx * fy)[..., None]
    return (
        texture[y0, x0] * wa
        + texture[y0, x1] * wb
        + texture[y1, x0] * wc
        + texture[y1, x1] * wd
    )


def _render_rows(scene: Scene, pose_weights: np.ndarray):
    """Render every row at its own pose weight. Returns (image, depth).

    pose_weights has one entry per image row; each row's pixels see the plane
    from the pose at that weight. All math is elementwise per row, which is
    what makes RS composition and GS rendering agree row-by-row exactly.
    """
    cam = scene.camera
    h, w = cam.height, cam.width
    f = cam.focal_length
    cx, cy = cam.principal_point
    lam = np.asarray(pose_weights, dtype=np.float64).reshape(h)

    # per-pixel camera-frame ray directions, z normalized to 1
    x = (np.arange(w, dtype=np.float64)[None, :] - cx) / f
    y = (np.arange(h, dtype=np.float64)[:, None] - cy) / f
    d_cam = np.stack(np.broadcast_arrays(x, y, np.ones((h, w))), axis=-1)

    rot = _rotation_matrices(lam[:, None] * scene.motion.omega[None, :])
    d_world = np.einsum("hij,hwj->hwi", rot, d_cam)
    centers = lam[:, None] * scene.motion.v[None, :]

    # plane n . X = z0 with n = (-P, -Q, 1), P = f dz_dx / z0, Q = f dz_dy / z0
    plane = scene.plane
    normal = np.array(
        [-f * plane.dz_dx / plane.z0, -f * plane.dz_dy / plane.z0, 1.0]
    )
    n_dot_d = d_world @ normal
    n_dot_c = centers @ normal
    if np.any(np.abs(n_dot_d) < 1e-12):
        raise PlaneBehindCamera("viewing ray parallel to the scene plane")
    t = (plane.z0 - n_dot_c)[:, None] / n_dot_d
    if np.any(t <= 0):
        raise PlaneBehindCamera("scene plane behind the camera for some pose")

    hits = centers[:, None, :] + t[..., None] * d_world
    z_ref = hits[..., 2]
    if np.any(z_ref <= 0):
        raise PlaneBehindCamera("plane hit behind the reference view")
    u_ref = f * hits[..., 0] / z_ref + cx
    v_ref = f * hits[..., 1] / z_ref + cy

    image = _sample_texture_periodic(scene.texture, u_ref, v_ref)
    return image, DepthMap(data=t)


def render_gs(scene: Scene, frame: int, s: float) -> GsFrame:
    """Render the global-shutter view at scanline time s of the given frame."""
    h = scene.camera.height
    if not (0 <= s <= h - 1):
        raise ValueError(f"scanline time {s} outside [0, {h - 1}]")
    lam = scanline_time_weight(frame, float(s), scene.timing, scene.camera,
                               scene.motion.k)
    image, depth = _render_rows(scene, np.full(h, lam))
    return GsFrame(image=image, scanline_time=float(s), depth=depth,
                   pose_weight=float(lam))


def compose_rs(scene: Scene, frame: int) -> RsFrame:
    """Compose the rolling-shutter frame row-by-row.

    Row s combines the pose at scanline time s, so it equals row s of
    render_gs(scene, frame, s) bit-exactly.
    """
    h = scene.camera.height
    rows = np.arange(h, dtype=np.float64)
    lam = scanline_time_weight(frame, rows, scene.timing, scene.camera,
                               scene.motion.k)
    image, depth = _render_rows(scene, lam)
    holes = np.zeros((h, scene.camera.width), dtype=bool)
    return RsFrame(image=image, frame_index=frame, occlusion_mask=holes,
                   depth=depth)


def gt_optical_flow(scene: Scene) -> tuple[FlowField, FlowField]:
    """Ground-truth optical flow in both directions (constant-velocity model).

    Forward flow lives on RS frame 1's grid and uses its composed depth;
    backward flow likewise on frame 2. Both come from the closed-form
    flow/readout relation with the simulator-known motion.
    """
    depth1 = compose_rs(scene, 1).depth
    depth2 = compose_rs(scene, 2).depth
    fwd = rs_flow_field(
        scene.camera, scene.motion.v, scene.motion.omega, scene.timing,
        depth1, Direction.FORWARD,
    )
    bwd = rs_flow_field(
        scene.camera, scene.motion.v, scene.motion.omega, scene.timing,
        depth2, Direction.BACKWARD,
    )
    return fwd, bwd


def gt_occlusion(scene: Scene, s: float, frame: int = 1) -> np.ndarray:
    """Pixels of the GS canvas at scanline time s with no splat source.

    Computed by accumulating bilinear coverage of the forward-mapped RS
    pixels, independently of the warping module, so it can serve as ground
    truth for it. True marks a hole.
    """
    direction = Direction.FORWARD if frame == 1 else Direction.BACKWARD
    depth = compose_rs(scene, frame).depth
    flow = undistortion_flow_from_geometry(
        scene.camera, scene.motion, scene.timing, depth, s, direction
    )
    cam = scene.camera
    h, w = cam.height, cam.width
    xs = np.arange(w, dtype=np.float64)[None, :] + flow.u
    ys = np.arange(h, dtype=np.float64)[:, None] + flow.v

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    mass = np.zeros((h, w))
    src_ok = flow.valid
    for dy in (0, 1):
        for dx in (0, 1):
            gx = x0 + dx
            gy = y0 + dy
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            ok = src_ok & (gx >= 0) & (gx < w) & (gy >= 0) & (gy < h)
            np.add.at(mass, (gy[ok], gx[ok]), weight[ok])
    return mass < OCCLUSION_MASS_THRESHOLD
