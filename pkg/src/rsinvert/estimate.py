"""Analytic estimators: camera motion from flow + depth, acceleration-factor
fitting, and a pyramidal local flow estimator.

Motion recovery inverts the readout-aware flow relation. Each observed flow
vector f is first rescaled to the inter-frame motion field pi = f / alpha
with alpha = 1 + g f_v / h computed from the observed vertical flow, which
makes the remaining system exactly linear in (v, omega):

    pi = A(x, y) v / Z + B(x, y) omega

Backward-direction flow observes the negated motion; the estimators undo
that internally and always report the forward inter-frame (v, omega).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, uniform_filter

from .camera import CameraModel, Direction, RsTiming, signed_gamma
from .errors import (
    EmptySearchRange,
    InsufficientData,
    NoConsensus,
    NonImprovingFitWarning,
    RankDeficient,
)
from .fields import DepthMap, FlowField, FlowKind
from .geometry import pixel_offsets, propagate
from .warp import SplatConfig, splat_forward

ALPHA_GUARD = 1e-6
HOLE_PENALTY = 0.25
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# camera motion from flow + depth


def _stack_equations(
    flow: FlowField,
    depth: DepthMap,
    camera: CameraModel,
    timing: RsTiming,
    rs_aware: bool,
):
    """Per-pixel design blocks A (n, 2, 6) and observations b (n, 2)."""
    if flow.kind is not FlowKind.OPTICAL:
        raise InsufficientData("motion estimation expects an optical flow")
    if (flow.height, flow.width) != (camera.height, camera.width) or (
        depth.height,
        depth.width,
    ) != (camera.height, camera.width):
        raise InsufficientData("flow, depth, and camera dimensions disagree")

    g = signed_gamma(timing, flow.direction)
    h = camera.height
    alpha = 1.0 + g * flow.v / h if rs_aware else np.ones_like(flow.v)
    ok = flow.valid & depth.valid & (np.abs(alpha) > ALPHA_GUARD)
    n = int(ok.sum())
    if n < 3:
        raise InsufficientData(f"only {n} usable pixels, need at least 3")

    x, y = pixel_offsets(camera)
    x = np.broadcast_to(x, ok.shape)[ok]
    y = np.broadcast_to(y, ok.shape)[ok]
    z = depth.data[ok]
    f = camera.focal_length

    a = np.zeros((n, 2, 6))
    a[:, 0, 0] = -f / z
    a[:, 0, 2] = x / z
    a[:, 0, 3] = x * y / f
    a[:, 0, 4] = -(f + x * x / f)
    a[:, 0, 5] = y
    a[:, 1, 1] = -f / z
    a[:, 1, 2] = y / z
    a[:, 1, 3] = f + y * y / f
    a[:, 1, 4] = -x * y / f
    a[:, 1, 5] = -x

    al = alpha[ok]
    b = np.stack([flow.u[ok] / al, flow.v[ok] / al], axis=1)
    return a, b, ok


def _solution_to_motion(theta: np.ndarray, direction: Direction):
    sign = 1.0 if direction is Direction.FORWARD else -1.0
    return sign * theta[:3], sign * theta[3:]


def estimate_motion_ls(
    flow: FlowField,
    depth: DepthMap,
    camera: CameraModel,
    timing: RsTiming,
    rs_aware: bool = True,
):
    """Least-squares (v, omega) from dense flow and known depth.

    Returns (v, omega, residual) with the residual as the RMS equation error
    in readout-normalized pixels. rs_aware=False skips the per-pixel alpha
    rescaling (for quantifying how much the readout correction matters).
    """
    a, b, _ = _stack_equations(flow, depth, camera, timing, rs_aware)
    design = a.reshape(-1, 6)
    rhs = b.reshape(-1)
    theta, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    if rank < 6:
        raise RankDeficient(f"normal system rank {rank} < 6")
    residual = float(np.sqrt(np.mean((design @ theta - rhs) ** 2)))
    v, omega = _solution_to_motion(theta, flow.direction)
    return v, omega, residual


def estimate_motion_robust(
    flow: FlowField,
    depth: DepthMap,
    camera: CameraModel,
    timing: RsTiming,
    iterations: int = 200,
    inlier_threshold_px: float = 0.5,
    seed: int = 0,
    rs_aware: bool = True,
):
    """Consensus-based motion fit tolerating gross flow outliers.

    Repeatedly solves exact 3-pixel (6-equation) systems, keeps the model
    with the most inliers (equation error below the threshold), and refits
    on that inlier set. Returns (v, omega, inlier_mask) with the mask on the
    flow grid. Raises NoConsensus if fewer than 10% of usable pixels ever
    agree with a model.
    """
    a, b, ok = _stack_equations(flow, depth, camera, timing, rs_aware)
    n = a.shape[0]
    rng = np.random.default_rng(seed)

    best_count = -1
    best_inliers = None
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        try:
            theta = np.linalg.solve(a[idx].reshape(6, 6), b[idx].reshape(6))
        except np.linalg.LinAlgError:
            continue
        err = np.linalg.norm(np.einsum("nij,j->ni", a, theta) - b, axis=1)
        inliers = err <= inlier_threshold_px
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers

    if best_inliers is None or best_count < max(3, int(0.1 * n)):
        raise NoConsensus(
            f"best consensus {max(best_count, 0)}/{n} below the 10% floor"
        )

    design = a[best_inliers].reshape(-1, 6)
    rhs = b[best_inliers].reshape(-1)
    theta, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    if rank < 6:
        raise RankDeficient(f"inlier refit rank {rank} < 6")
    err = np.linalg.norm(np.einsum("nij,j->ni", a, theta) - b, axis=1)
    final = err <= inlier_threshold_px

    mask = np.zeros(ok.shape, dtype=bool)
    mask[ok] = final
    v, omega = _solution_to_motion(theta, flow.direction)
    return v, omega, mask


# ---------------------------------------------------------------------------
# acceleration factor fitting


@dataclass
class PhiFit:
    """Result of estimate_phi: independent per-direction minimizers."""

    phi1: float
    phi2: float
    objective1: float
    objective2: float
    grid_phis: np.ndarray
    grid_objective1: np.ndarray
    grid_objective2: np.ndarray


def _photometric_objective(
    rs: np.ndarray,
    anchor: FlowField,
    target_s: float,
    phi: float,
    reference: np.ndarray,
    camera: CameraModel,
    config: SplatConfig,
) -> float:
    """Mean absolute error of the propagated splat against the reference.

    Destinations without splat mass are excluded from the mean but charged a
    fixed per-pixel penalty, so a phi that throws pixels away cannot win by
    shrinking its own support.
    """
    moved = propagate(anchor, target_s, camera, phi)
    out, valid = splat_forward(rs, moved, None, config)
    frac = float(valid.mean())
    if frac == 0.0:
        return 1.0 + HOLE_PENALTY
    diff = np.abs(out - np.asarray(reference, dtype=np.float64))
    if diff.ndim == 3:
        diff = diff.mean(axis=2)
    return float(diff[valid].mean()) + HOLE_PENALTY * (1.0 - frac)


def _golden_section(func, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = (a + b) / 2.0
    return x, func(x)


def estimate_phi(
    rs1: np.ndarray,
    rs2: np.ndarray,
    u1m: FlowField,
    u2m: FlowField,
    reference_s: float,
    reference1: np.ndarray,
    reference2: np.ndarray,
    camera: CameraModel,
    search_range: tuple = (-1.9, 4.0),
    grid_points: int = 60,
    tol: float = 1e-4,
    splat_config: SplatConfig = SplatConfig(),
    improvement_margin: float = 1e-6,
) -> PhiFit:
    """Fit the propagation acceleration factor phi per direction.

    Each direction is fitted independently: propagate that frame's anchor
    undistortion flow to reference_s under candidate phi, splat the RS frame
    there, and minimize the photometric error against the supplied reference
    image (coarse grid, then golden-section refinement around the best cell).
    Warns with NonImprovingFitWarning when the winner beats phi = 0 by less
    than improvement_margin, which is the expected outcome on
    constant-velocity data.
    """
    lo, hi = float(search_range[0]), float(search_range[1])
    if not lo < hi:
        raise EmptySearchRange(f"search range [{lo}, {hi}] is empty")
    if grid_points < 3:
        raise EmptySearchRange(f"grid needs at least 3 points, got {grid_points}")

    phis = np.linspace(lo, hi, grid_points)
    results = []
    grids = []
    for rs, anchor, reference in ((rs1, u1m, reference1), (rs2, u2m, reference2)):
        def objective(phi: float) -> float:
            return _photometric_objective(
                rs, anchor, reference_s, float(phi), reference, camera, splat_config
            )

        coarse = np.array([objective(p) for p in phis])
        best = int(np.argmin(coarse))
        bracket_lo = phis[max(best - 1, 0)]
        bracket_hi = phis[min(best + 1, grid_points - 1)]
        phi_star, obj_star = _golden_section(objective, bracket_lo, bracket_hi, tol)
        if coarse[best] < obj_star:
            phi_star, obj_star = float(phis[best]), float(coarse[best])
        if objective(0.0) - obj_star < improvement_margin:
            warnings.warn(
                f"phi = {phi_star:.4f} improves on phi = 0 by less than "
                f"{improvement_margin}",
                NonImprovingFitWarning,
                stacklevel=2,
            )
        results.append((float(phi_star), float(obj_star)))
        grids.append(coarse)

    return PhiFit(
        phi1=results[0][0],
        phi2=results[1][0],
        objective1=results[0][1],
        objective2=results[1][1],
        grid_phis=phis,
        grid_objective1=grids[0],
        grid_objective2=grids[1],
    )


# ---------------------------------------------------------------------------
# pyramidal local flow


def _to_gray(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    if arr.max() > 1.5:
        arr = arr / 255.0
    return arr


def _sample_clamp(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = img.shape
    cx = np.clip(xs, 0.0, w - 1.0)
    cy = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(cx).astype(np.int64)
    y0 = np.floor(cy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = cx - x0
    fy = cy - y0
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )


def estimate_flow_lk(
    img1: np.ndarray,
    img2: np.ndarray,
    levels: int = 3,
    window: int = 11,
    iterations: int = 3,
    min_eig: float = 1e-4,
    direction: Direction = Direction.FORWARD,
) -> FlowField:
    """Pyramidal local least-squares flow from img1 to img2.

    The validity mask keeps pixels whose local structure tensor at the
    finest level is well-conditioned (smallest eigenvalue above min_eig);
    everywhere else the flow is reported but untrusted.
    """
    g1 = _to_gray(img1)
    g2 = _to_gray(img2)
    if g1.shape != g2.shape:
        raise InsufficientData(f"image shapes differ: {g1.shape} vs {g2.shape}")
    if levels < 1:
        raise InsufficientData(f"levels must be >= 1, got {levels}")

    pyr1, pyr2 = [g1], [g2]
    for _ in range(levels - 1):
        if min(pyr1[-1].shape) < 2 * window:
            break
        pyr1.append(gaussian_filter(pyr1[-1], 1.0)[::2, ::2])
        pyr2.append(gaussian_filter(pyr2[-1], 1.0)[::2, ::2])

    flow_u = np.zeros_like(pyr1[-1])
    flow_v = np.zeros_like(pyr1[-1])
    lam_min = None
    for lvl in range(len(pyr1) - 1, -1, -1):
        a, b = pyr1[lvl], pyr2[lvl]
        h, w = a.shape
        if flow_u.shape != a.shape:
            sy = h / flow_u.shape[0]
            sx = w / flow_u.shape[1]
            yy = np.arange(h)[:, None] / sy
            xx = np.arange(w)[None, :] / sx
            flow_u = _sample_clamp(flow_u, np.broadcast_to(xx, (h, w)),
                                   np.broadcast_to(yy, (h, w))) * sx
            flow_v = _sample_clamp(flow_v, np.broadcast_to(xx, (h, w)),
                                   np.broadcast_to(yy, (h, w))) * sy

        iy, ix = np.gradient(a)
        sxx = uniform_filter(ix * ix, window)
        sxy = uniform_filter(ix * iy, window)
        syy = uniform_filter(iy * iy, window)
        trace = sxx + syy
        det = sxx * syy - sxy * sxy
        lam_min = 0.5 * (trace - np.sqrt(np.maximum(trace * trace - 4 * det, 0.0)))
        solvable = lam_min > min_eig
        safe_det = np.where(solvable, det, 1.0)

        grid_x = np.arange(w, dtype=np.float64)[None, :]
        grid_y = np.arange(h, dtype=np.float64)[:, None]
        for _ in range(iterations):
            warped = _sample_clamp(b, grid_x + flow_u, grid_y + flow_v)
            it = warped - a
            sxt = uniform_filter(ix * it, window)
            syt = uniform_filter(iy * it, window)
            du = (-syy * sxt + sxy * syt) / safe_det
            dv = (sxy * sxt - sxx * syt) / safe_det
            step = np.clip(du, -window, window), np.clip(dv, -window, window)
            flow_u = np.where(solvable, flow_u + step[0], flow_u)
            flow_v = np.where(solvable, flow_v + step[1], flow_v)

    data = np.stack([flow_u, flow_v], axis=-1)
    return FlowField(
        data=data, kind=FlowKind.OPTICAL, direction=direction,
        valid=lam_min > min_eig,
    )
