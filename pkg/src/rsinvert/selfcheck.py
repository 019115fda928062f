"""Built-in invariant suite: fast end-to-end checks of the core identities.

Each check restates the expected relationship with its own inline formula
(rather than calling back into the code path under test), runs on randomized
inputs with a fixed seed, and reports pass/fail with a measured detail. The
whole suite is budgeted to finish in well under a minute.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, Direction, MotionState, RsTiming
from .fields import DepthMap, FlowField, FlowKind
from .geometry import (
    correlation_map_from_geometry,
    interpolation_factor,
    motion_field,
    propagate,
    rs_flow_field,
    scanline_time_weight,
    undistortion_factor,
    undistortion_flow_from_geometry,
    undistortion_from_flow,
    validate_correlation_bounds,
)
from .metrics import psnr
from .pipeline import invert_pair
from .scene import DepthRamp, Scene
from .simulate import compose_rs, gt_optical_flow, render_gs
from .texture import fourier_texture


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _finish(name: str, passed: bool, detail: str, start: float) -> CheckResult:
    return CheckResult(name, passed, detail, time.perf_counter() - start)


def check_correlation_bounds(trials: int = 1000, seed: int = 20260819) -> CheckResult:
    """Randomized sweep of the middle-scanline correlation-map bounds.

    Motions are drawn broadly, then jointly rescaled so the vertical motion
    respects |gamma * pi_v| <= 0.98 h (the bound's precondition), and the
    strict sign/interval structure must hold with zero violations.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    camera = CameraModel(
        focal_length=140.0, principal_point=(79.5, 59.5), width=160, height=120
    )
    xs = np.arange(camera.width, dtype=np.float64)[None, :]
    ys = np.arange(camera.height, dtype=np.float64)[:, None]
    pixels = np.stack(np.broadcast_arrays(xs, ys), axis=-1)
    h = camera.height
    total_violations = 0
    worst = ""
    for trial in range(trials):
        gamma = rng.uniform(0.3, 1.0)
        timing = RsTiming(gamma=gamma)
        z0 = rng.uniform(0.8, 5.0)
        v = rng.uniform(-1.0, 1.0, 3) * z0
        omega = rng.uniform(-0.05, 0.05, 3)
        depth = DepthMap(data=np.full((camera.height, camera.width), z0))
        direction = Direction.FORWARD if trial % 2 == 0 else Direction.BACKWARD
        sign = 1.0 if direction is Direction.FORWARD else -1.0
        pi = motion_field(camera, sign * v, sign * omega, pixels, depth.data)
        peak = float(np.abs(gamma * pi[..., 1]).max())
        if peak > 0.98 * h:
            scale = 0.98 * h / peak
            v = v * scale
            omega = omega * scale
        corr = correlation_map_from_geometry(
            camera, v, omega, timing, depth, h / 2.0, direction
        )
        report = validate_correlation_bounds(corr, strict=True)
        if report.violations:
            total_violations += report.violations
            worst = f"first failing trial {trial}, rows {report.rows[:5]}"
    detail = f"{trials} sweeps, {total_violations} violations"
    if worst:
        detail += f" ({worst})"
    return _finish("correlation-bounds", total_violations == 0, detail, start)


def check_velocity_reductions(samples: int = 100_000, seed: int = 7) -> CheckResult:
    """k = 0 / phi = 0 forms must equal the plain linear-time expressions."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    h = 480
    camera = CameraModel(
        focal_length=400.0, principal_point=(320.0, 240.0), width=640, height=h
    )
    worst = 0.0

    s = rng.uniform(0, h - 1, samples)
    eta = rng.uniform(0, h - 1, samples)
    for gamma in (1.0, 0.73, 0.4):
        timing = RsTiming(gamma=gamma)
        for frame in (1, 2):
            lam = scanline_time_weight(frame, s, timing, camera, k=0.0)
            lam_linear = (frame - 1) + gamma * s / h
            denom = np.maximum(np.abs(lam_linear), 1e-30)
            worst = max(worst, float((np.abs(lam - lam_linear) / denom).max()))

        beta_f = undistortion_factor(s, eta, timing, camera, Direction.FORWARD, 0.0)
        beta_b = undistortion_factor(s, eta, timing, camera, Direction.BACKWARD, 0.0)
        expect = gamma * (s - eta) / h
        scale = np.maximum(np.abs(expect), 1e-30)
        worst = max(worst, float((np.abs(beta_f - expect) / scale).max()))
        worst = max(worst, float((np.abs(beta_b + expect) / scale).max()))

    fields = 100
    rows = samples // fields
    small_cam = CameraModel(
        focal_length=100.0,
        principal_point=(0.5, (rows - 1) / 2.0),
        width=2,
        height=rows,
    )
    eta_rows = np.arange(rows, dtype=np.float64)
    for _ in range(fields):
        s1 = float(rng.uniform(0, rows - 1))
        s2 = float(rng.uniform(0, rows - 1))
        data = rng.normal(size=(rows, 2, 2))
        field = FlowField(
            data=data,
            kind=FlowKind.UNDISTORTION,
            direction=Direction.FORWARD,
            target_scanline=s1,
        )
        moved = propagate(field, s2, small_cam, phi=0.0)
        keep = np.abs(s1 - eta_rows) > 1e-6
        expect = data[keep] * ((s2 - eta_rows[keep]) / (s1 - eta_rows[keep]))[
            :, None, None
        ]
        got = moved.data[keep]
        scale = np.maximum(np.abs(expect), 1e-30)
        if keep.any():
            worst = max(worst, float((np.abs(got - expect) / scale).max()))

    passed = worst <= 1e-12
    return _finish(
        "velocity-reductions", passed, f"worst relative error {worst:.2e}", start
    )


def check_flow_fixed_point(samples: int = 100_000, seed: int = 11) -> CheckResult:
    """Closed-form RS flow must satisfy f = alpha(f_v) * pi away from the pole."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    batch = 0
    while checked < samples:
        batch += 1
        n = 20_000
        h = int(rng.integers(100, 800))
        w = int(rng.integers(100, 800))
        f = float(rng.uniform(80, 600))
        camera = CameraModel(
            focal_length=f,
            principal_point=((w - 1) / 2.0, (h - 1) / 2.0),
            width=w,
            height=h,
        )
        gamma = float(rng.uniform(0.2, 1.0))
        timing = RsTiming(gamma=gamma)
        direction = Direction.FORWARD if batch % 2 == 0 else Direction.BACKWARD
        sign = 1.0 if direction is Direction.FORWARD else -1.0
        v = rng.uniform(-0.5, 0.5, 3)
        omega = rng.uniform(-0.02, 0.02, 3)
        pixel = np.stack(
            [rng.uniform(0, w - 1, n), rng.uniform(0, h - 1, n)], axis=-1
        )
        depth = rng.uniform(0.5, 5.0, n)
        pi = motion_field(camera, sign * v, sign * omega, pixel, depth)
        ok = np.abs(gamma * pi[..., 1]) <= 0.9 * h
        if not ok.any():
            continue
        pi = pi[ok]
        g = sign * gamma
        flow = (h / (h - g * pi[:, 1]))[:, None] * pi
        alpha = interpolation_factor(flow[:, 1], timing, camera, direction)
        resid = np.abs(flow - alpha[:, None] * pi)
        scale = np.maximum(np.abs(flow), 1e-12)
        worst = max(worst, float((resid / scale).max()))
        checked += int(ok.sum())
    passed = worst <= 1e-9
    return _finish(
        "flow-fixed-point", passed,
        f"{checked} samples, worst relative error {worst:.2e}", start,
    )


def check_two_path(seed: int = 3) -> CheckResult:
    """Correlation-scaled flow must equal the directly built undistortion flow."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    camera = CameraModel(
        focal_length=260.0, principal_point=(159.5, 127.5), width=320, height=256
    )
    timing = RsTiming(gamma=1.0)
    worst = 0.0
    for direction in (Direction.FORWARD, Direction.BACKWARD):
        v = rng.uniform(-0.3, 0.3, 3)
        omega = rng.uniform(-0.01, 0.01, 3)
        motion = MotionState(v=v, omega=omega, k=0.0)
        z = rng.uniform(1.5, 3.0)
        depth = DepthMap(data=np.full((256, 320), z))
        for s in (0.0, 64.0, 128.0, 255.0):
            direct = undistortion_flow_from_geometry(
                camera, motion, timing, depth, s, direction
            )
            flow = rs_flow_field(camera, v, omega, timing, depth, direction)
            corr = correlation_map_from_geometry(
                camera, v, omega, timing, depth, s, direction
            )
            two_path = undistortion_from_flow(flow, corr)
            both = direct.valid & two_path.valid
            gap = np.abs(direct.data - two_path.data)[both]
            worst = max(worst, float(gap.max()))
    passed = worst <= 1e-6
    return _finish("two-path", passed, f"worst gap {worst:.2e} px", start)


def check_round_trip() -> CheckResult:
    """Small simulated pair inverted back to GS must clear 30 dB masked."""
    start = time.perf_counter()
    camera = CameraModel(
        focal_length=120.0, principal_point=(63.5, 47.5), width=128, height=96
    )
    scene = Scene(
        texture=fourier_texture(96, 128, seed=5),
        camera=camera,
        timing=RsTiming(gamma=1.0),
        motion=MotionState(v=np.array([0.12, 0.04, 0.0]), omega=np.zeros(3)),
        plane=DepthRamp(z0=2.0),
    )
    rs1 = compose_rs(scene, 1)
    rs2 = compose_rs(scene, 2)
    fwd, bwd = gt_optical_flow(scene)
    m = camera.middle_scanline
    result = invert_pair(
        rs1.image, rs2.image, fwd, bwd, camera, scene.timing, [m],
        depth1=rs1.depth, depth2=rs2.depth,
    )[0]
    score1 = psnr(result.image1, render_gs(scene, 1, m).image, result.valid1)
    score2 = psnr(result.image2, render_gs(scene, 2, m).image, result.valid2)
    passed = score1 >= 30.0 and score2 >= 30.0
    return _finish(
        "round-trip", passed,
        f"forward {score1:.1f} dB, backward {score2:.1f} dB", start,
    )


def run_selfcheck() -> list:
    """Run the whole suite; returns the list of CheckResults."""
    return [
        check_correlation_bounds(),
        check_velocity_reductions(),
        check_flow_fixed_point(),
        check_two_path(),
        check_round_trip(),
    ]


def format_report(results) -> str:
    lines = ["self-check results:"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"  [{status}] {r.name:<22} {r.seconds:6.2f}s  {r.detail}")
    total = sum(r.seconds for r in results)
    ok = all(r.passed for r in results)
    lines.append(f"  {'all checks passed' if ok else 'FAILURES PRESENT'} "
                 f"in {total:.2f}s")
    return "\n".join(lines)
