"""Command-line interface: simulate, invert, eval, selfcheck.

Exit codes: 0 on success, 1 when a validation step fails (bad estimates,
failed checks, inconsistent inputs), 2 on IO or configuration trouble
(missing files, malformed configs or headers). Scanline outputs that are
independent of each other can be produced in parallel; the RSINVERT_THREADS
environment variable caps the worker count (default 1, fully serial).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .camera import CameraModel, Direction, RsTiming
from .errors import (
    BadMagic,
    ConfigError,
    DecodeError,
    MismatchedFrameSets,
    MissingReference,
    RsToolkitError,
    TruncatedFile,
    UnsupportedVariant,
)
from .estimate import estimate_flow_lk, estimate_phi
from .fields import FlowKind
from .fileio import read_flo, read_pfm, read_png, write_flo, write_pfm, write_png
from .geometry import correlation_map_from_flow, undistortion_from_flow
from .metrics import psnr, ssim
from .pipeline import reconstruct_gs
from .scene import load_scene
from .selfcheck import format_report, run_selfcheck
from .simulate import compose_rs, gt_occlusion, gt_optical_flow, render_gs

_IO_ERRORS = (
    ConfigError,
    BadMagic,
    TruncatedFile,
    UnsupportedVariant,
    DecodeError,
    OSError,
)


def _thread_count() -> int:
    raw = os.environ.get("RSINVERT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"RSINVERT_THREADS must be an integer, got {raw!r}")


def _run_tasks(tasks) -> None:
    """Run zero-argument callables, possibly in parallel."""
    workers = _thread_count()
    if workers == 1:
        for task in tasks:
            task()
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(task) for task in tasks]:
            future.result()


def _scanline_tag(s: float) -> str:
    return f"{s:07.2f}"


def _load_image_float(path) -> np.ndarray:
    return read_png(path).astype(np.float64) / 255.0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    scene = load_scene(args.scene)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    frames = {1: compose_rs(scene, 1), 2: compose_rs(scene, 2)}
    manifest = {
        "width": scene.camera.width,
        "height": scene.camera.height,
        "focal": scene.camera.focal_length,
        "principal": list(scene.camera.principal_point),
        "gamma": scene.timing.gamma,
        "k": scene.motion.k,
        "v": scene.motion.v.tolist(),
        "omega": scene.motion.omega.tolist(),
        "frames": scene.frame_count,
        "scanlines": list(scene.gs_scanlines),
        "files": {"rs": [], "flows": [], "depths": [], "gs": [], "occlusion": []},
    }

    for idx, frame in frames.items():
        name = f"rs_{idx}.png"
        write_png(out / name, frame.image)
        manifest["files"]["rs"].append(name)
        depth_name = f"depth_rs_{idx}.pfm"
        write_pfm(out / depth_name, frame.depth)
        manifest["files"]["depths"].append(depth_name)

    fwd, bwd = gt_optical_flow(scene)
    write_flo(out / "flow_fwd.flo", fwd)
    write_flo(out / "flow_bwd.flo", bwd)
    manifest["files"]["flows"] = ["flow_fwd.flo", "flow_bwd.flo"]

    def emit_gs(frame_idx: int, s: float) -> None:
        tag = _scanline_tag(s)
        gs = render_gs(scene, frame_idx, s)
        write_png(out / f"gs_{frame_idx}_{tag}.png", gs.image)
        occ = gt_occlusion(scene, s, frame_idx)
        write_png(out / f"occ_{frame_idx}_{tag}.png", occ.astype(np.float64))

    tasks = []
    for s in scene.gs_scanlines:
        for frame_idx in (1, 2):
            tag = _scanline_tag(s)
            manifest["files"]["gs"].append(f"gs_{frame_idx}_{tag}.png")
            manifest["files"]["occlusion"].append(f"occ_{frame_idx}_{tag}.png")
            tasks.append(lambda f=frame_idx, t=s: emit_gs(f, t))
    _run_tasks(tasks)

    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"simulated scene written to {out}")
    return 0


# ---------------------------------------------------------------------------
# invert


def _parse_scanlines(raw: str) -> list:
    try:
        values = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--scanlines must be comma-separated numbers, got {raw!r}")
    if not values:
        raise ConfigError("--scanlines lists no values")
    return values


def _invert_flows(args, rs1, rs2):
    if args.flow == "files":
        if not (args.flow_fwd and args.flow_bwd):
            raise ConfigError("--flow files needs --flow-fwd and --flow-bwd")
        return (
            read_flo(args.flow_fwd, FlowKind.OPTICAL, Direction.FORWARD),
            read_flo(args.flow_bwd, FlowKind.OPTICAL, Direction.BACKWARD),
        )
    if args.flow == "gt":
        if not args.scene:
            raise ConfigError("--flow gt needs --scene for the simulator parameters")
        scene = load_scene(args.scene)
        return gt_optical_flow(scene)
    return (
        estimate_flow_lk(rs1, rs2, direction=Direction.FORWARD),
        estimate_flow_lk(rs2, rs1, direction=Direction.BACKWARD),
    )


def _invert_depths(args):
    if args.depth == "files":
        if not (args.depth1 and args.depth2):
            raise ConfigError("--depth files needs --depth1 and --depth2")
        return read_pfm(args.depth1), read_pfm(args.depth2)
    if args.depth == "scene":
        if not args.scene:
            raise ConfigError("--depth scene needs --scene")
        scene = load_scene(args.scene)
        return compose_rs(scene, 1).depth, compose_rs(scene, 2).depth
    return None, None


def cmd_invert(args) -> int:
    rs1 = _load_image_float(args.rs1)
    rs2 = _load_image_float(args.rs2)
    if rs1.shape != rs2.shape:
        raise ConfigError(f"RS frames disagree: {rs1.shape} vs {rs2.shape}")
    height, width = rs1.shape[:2]
    # Flow-based inversion is calibration-free: only the scanline count of
    # this camera model is ever consumed, so nominal intrinsics suffice.
    camera = CameraModel(
        focal_length=1.0,
        principal_point=((width - 1) / 2.0, (height - 1) / 2.0),
        width=width,
        height=height,
    )
    timing = RsTiming(gamma=args.gamma)
    scanlines = _parse_scanlines(args.scanlines)

    flow_fwd, flow_bwd = _invert_flows(args, rs1, rs2)
    depth1, depth2 = _invert_depths(args)

    phi1 = phi2 = None
    if args.model == "acceleration":
        if args.fit_phi:
            if not (args.ref1 and args.ref2 and args.reference_s is not None):
                raise MissingReference(
                    "--fit-phi needs --ref1, --ref2, and --reference-s"
                )
            m = camera.middle_scanline
            u1m = undistortion_from_flow(
                flow_fwd, correlation_map_from_flow(flow_fwd, m, timing)
            )
            u2m = undistortion_from_flow(
                flow_bwd, correlation_map_from_flow(flow_bwd, m, timing)
            )
            fit = estimate_phi(
                rs1,
                rs2,
                u1m,
                u2m,
                args.reference_s,
                _load_image_float(args.ref1),
                _load_image_float(args.ref2),
                camera,
            )
            phi1, phi2 = fit.phi1, fit.phi2
            print(f"fitted phi1 = {phi1:.4f}, phi2 = {phi2:.4f}")
        else:
            phi1 = args.phi1
            phi2 = args.phi2 if args.phi2 is not None else args.phi1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def emit(s: float) -> None:
        tag = _scanline_tag(s)
        img1, valid1 = reconstruct_gs(
            rs1, flow_fwd, s, timing, camera, phi1, depth1,
            sharpness=args.sharpness, fill_holes=args.fill_holes,
        )
        img2, valid2 = reconstruct_gs(
            rs2, flow_bwd, s, timing, camera, phi2, depth2,
            sharpness=args.sharpness, fill_holes=args.fill_holes,
        )
        write_png(out / f"gs_1_{tag}.png", img1)
        write_png(out / f"mask_1_{tag}.png", valid1.astype(np.float64))
        write_png(out / f"gs_2_{tag}.png", img2)
        write_png(out / f"mask_2_{tag}.png", valid2.astype(np.float64))

    _run_tasks([lambda t=s: emit(t) for s in scanlines])
    print(f"inverted {len(scanlines)} scanline target(s) into {out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _collect_frames(directory: Path) -> dict:
    return {p.name: p for p in sorted(directory.glob("gs_*.png"))}


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    preds = _collect_frames(pred_dir)
    gts = _collect_frames(gt_dir)
    if set(preds) != set(gts):
        only_pred = sorted(set(preds) - set(gts))
        only_gt = sorted(set(gts) - set(preds))
        raise MismatchedFrameSets(
            f"frame sets differ (pred-only {only_pred}, gt-only {only_gt})"
        )
    if not preds:
        raise MismatchedFrameSets("no gs_*.png frames found to compare")

    use_mask = not args.no_mask
    rows = []
    for name in sorted(preds):
        pred = read_png(preds[name])
        gt = read_png(gts[name])
        row = {
            "frame": name,
            "psnr": psnr(pred, gt),
            "ssim": ssim(pred, gt),
        }
        if use_mask:
            mask = np.ones(pred.shape[:2], dtype=bool)
            mask_path = pred_dir / name.replace("gs_", "mask_")
            if mask_path.is_file():
                mask &= read_png(mask_path) > 127
            occ_path = gt_dir / name.replace("gs_", "occ_")
            if occ_path.is_file():
                mask &= read_png(occ_path) <= 127
            if mask.any():
                row["psnr_masked"] = psnr(pred, gt, mask)
            else:
                row["psnr_masked"] = float("nan")
        rows.append(row)

    report = {
        "frames": rows,
        "mean_psnr": float(np.mean([r["psnr"] for r in rows])),
        "mean_ssim": float(np.mean([r["ssim"] for r in rows])),
    }
    if use_mask:
        masked = [r["psnr_masked"] for r in rows if not np.isnan(r["psnr_masked"])]
        report["mean_psnr_masked"] = float(np.mean(masked)) if masked else None

    for row in rows:
        line = f"{row['frame']}: psnr {row['psnr']:.2f} dB  ssim {row['ssim']:.4f}"
        if use_mask and not np.isnan(row.get("psnr_masked", float("nan"))):
            line += f"  psnr_masked {row['psnr_masked']:.2f} dB"
        print(line)
    print(
        f"mean: psnr {report['mean_psnr']:.2f} dB  ssim {report['mean_ssim']:.4f}"
    )
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# selfcheck


def cmd_selfcheck(args) -> int:
    results = run_selfcheck()
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsinvert",
        description="Rolling-shutter geometry toolkit: simulate, invert, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="render a scene to RS/GS/flow/depth files")
    p_sim.add_argument("--scene", required=True, help="scene config (TOML)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_inv = sub.add_parser("invert", help="invert an RS pair to GS frames")
    p_inv.add_argument("--rs1", required=True, help="first RS frame (PNG)")
    p_inv.add_argument("--rs2", required=True, help="second RS frame (PNG)")
    p_inv.add_argument("--gamma", type=float, required=True,
                       help="readout time ratio in (0, 1]; no default on purpose")
    p_inv.add_argument("--scanlines", required=True,
                       help="comma-separated target scanline times")
    p_inv.add_argument("--flow", choices=("gt", "lk", "files"), default="files")
    p_inv.add_argument("--flow-fwd", help=".flo file, forward flow")
    p_inv.add_argument("--flow-bwd", help=".flo file, backward flow")
    p_inv.add_argument("--scene", help="scene config for --flow gt / --depth scene")
    p_inv.add_argument("--depth", choices=("files", "scene", "none"), default="none")
    p_inv.add_argument("--depth1", help="PFM depth for RS frame 1")
    p_inv.add_argument("--depth2", help="PFM depth for RS frame 2")
    p_inv.add_argument("--model", choices=("velocity", "acceleration"),
                       default="velocity")
    p_inv.add_argument("--phi1", type=float, default=0.0,
                       help="acceleration propagation factor, forward")
    p_inv.add_argument("--phi2", type=float, default=None,
                       help="acceleration propagation factor, backward "
                            "(defaults to --phi1)")
    p_inv.add_argument("--fit-phi", action="store_true",
                       help="fit phi photometrically against reference frames")
    p_inv.add_argument("--ref1", help="reference GS image for the forward fit")
    p_inv.add_argument("--ref2", help="reference GS image for the backward fit")
    p_inv.add_argument("--reference-s", type=float, default=None,
                       help="scanline time of the reference images")
    p_inv.add_argument("--sharpness", type=float, default=10.0)
    p_inv.add_argument("--fill-holes", action="store_true",
                       help="fill splat holes from nearest valid pixels")
    p_inv.add_argument("--out", required=True)
    p_inv.set_defaults(func=cmd_invert)

    p_eval = sub.add_parser("eval", help="PSNR/SSIM report of predictions vs GT")
    p_eval.add_argument("--pred", required=True, help="directory with gs_*.png")
    p_eval.add_argument("--gt", required=True, help="directory with gs_*.png")
    p_eval.add_argument("--no-mask", action="store_true",
                        help="skip the masked-PSNR variant")
    p_eval.add_argument("--report", help="also write the report as JSON")
    p_eval.set_defaults(func=cmd_eval)

    p_check = sub.add_parser("selfcheck", help="run the built-in invariant suite")
    p_check.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RsToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
