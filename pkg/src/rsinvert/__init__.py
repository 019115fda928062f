"""Rolling-shutter inversion toolkit.

Recovers global-shutter frames at arbitrary scanline times from a pair of
consecutive rolling-shutter frames, built around the differential geometry
tying optical flow, undistortion flow, and readout timing together. Includes
a planar-scene simulator for ground truth, forward/backward warping, analytic
motion and acceleration estimators, quality metrics, and file I/O.
"""

from .camera import CameraModel, Direction, MotionState, RsTiming
from .estimate import (
    PhiFit,
    estimate_flow_lk,
    estimate_motion_ls,
    estimate_motion_robust,
    estimate_phi,
)
from .fields import CorrelationMap, DepthMap, FlowField, FlowKind
from .fileio import (
    read_flo,
    read_pfm,
    read_png,
    write_flo,
    write_pfm,
    write_png,
)
from .geometry import (
    correlation_factor,
    correlation_map_from_flow,
    correlation_map_from_geometry,
    interpolation_factor,
    motion_field,
    propagate,
    relative_scanline_motion,
    rs_flow_closed_form,
    rs_flow_field,
    scanline_time_weight,
    undistortion_factor,
    undistortion_flow_from_geometry,
    undistortion_from_flow,
    validate_correlation_bounds,
)
from .metrics import psnr, ssim
from .pipeline import ScanlineResult, invert_pair, reconstruct_gs, undistortion_map
from .scene import DepthRamp, Scene, load_scene, scene_from_dict
from .selfcheck import run_selfcheck
from .simulate import compose_rs, gt_occlusion, gt_optical_flow, render_gs
from .texture import checker_texture, fourier_texture
from .warp import HolePolicy, SplatConfig, WeightMode, backward_warp, splat_forward

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "CorrelationMap",
    "DepthMap",
    "DepthRamp",
    "Direction",
    "FlowField",
    "FlowKind",
    "HolePolicy",
    "MotionState",
    "PhiFit",
    "RsTiming",
    "ScanlineResult",
    "Scene",
    "SplatConfig",
    "WeightMode",
    "backward_warp",
    "checker_texture",
    "compose_rs",
    "correlation_factor",
    "correlation_map_from_flow",
    "correlation_map_from_geometry",
    "estimate_flow_lk",
    "estimate_motion_ls",
    "estimate_motion_robust",
    "estimate_phi",
    "fourier_texture",
    "gt_occlusion",
    "gt_optical_flow",
    "interpolation_factor",
    "invert_pair",
    "load_scene",
    "motion_field",
    "propagate",
    "psnr",
    "read_flo",
    "read_pfm",
    "read_png",
    "reconstruct_gs",
    "relative_scanline_motion",
    "render_gs",
    "rs_flow_closed_form",
    "rs_flow_field",
    "run_selfcheck",
    "scanline_time_weight",
    "scene_from_dict",
    "splat_forward",
    "ssim",
    "undistortion_factor",
    "undistortion_flow_from_geometry",
    "undistortion_from_flow",
    "undistortion_map",
    "validate_correlation_bounds",
    "write_flo",
    "write_pfm",
    "write_png",
    "__version__",
]
