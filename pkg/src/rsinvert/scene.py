"""Scene description and config-file loading for the plane simulator.

A scene is a textured plane, a camera, rolling-shutter timing, and a motion
state. The plane is given in the reference view (frame 1, scanline 0) by a
center depth z0 and depth slopes per pixel at the principal point, so depth
along the viewing ray of pixel offset (x, y) is

    Z(x, y) = z0 / (1 - (dz_dx * x + dz_dy * y) / z0)

which is exactly the fronto-parallel plane when both slopes are zero.

Config files are TOML with a flat schema plus an optional [depth_ramp] table;
unknown keys are rejected so typos fail loudly instead of silently changing
the scene.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .camera import CameraModel, K_MAX, K_MIN, MotionState, RsTiming
from .errors import ConfigError
from .fields import DepthMap
from .fileio import read_png
from .geometry import motion_field, pixel_offsets
from .texture import checker_texture, fourier_texture


@dataclass(frozen=True)
class DepthRamp:
    """Plane depth: center depth plus per-pixel slopes at the principal point."""

    z0: float
    dz_dx: float = 0.0
    dz_dy: float = 0.0

    def __post_init__(self):
        if self.z0 <= 0:
            raise ConfigError(f"plane depth z0 must be positive, got {self.z0}")


@dataclass(frozen=True)
class Scene:
    """Immutable simulator scene."""

    texture: np.ndarray
    camera: CameraModel
    timing: RsTiming
    motion: MotionState
    plane: DepthRamp
    frame_count: int = 2
    gs_scanlines: tuple = field(default=())

    def __post_init__(self):
        if self.texture.shape != (self.camera.height, self.camera.width, 3):
            raise ConfigError(
                f"texture shape {self.texture.shape} does not match camera "
                f"{self.camera.height}x{self.camera.width}x3"
            )
        if self.frame_count != 2:
            raise ConfigError(
                f"only two-frame scenes are supported, got frames={self.frame_count}"
            )
        self._check_vertical_motion(self.reference_depth())

    def reference_depth(self) -> DepthMap:
        """Depth of the plane in the reference view (frame 1, scanline 0)."""
        x, y = pixel_offsets(self.camera)
        denom = 1.0 - (self.plane.dz_dx * x + self.plane.dz_dy * y) / self.plane.z0
        if not np.all(denom > 0):
            raise ConfigError("depth ramp puts part of the plane behind the camera")
        return DepthMap(data=self.plane.z0 / denom)

    def _check_vertical_motion(self, depth: DepthMap) -> None:
        """Enforce |gamma * pi_v| < h, the readout-singularity precondition."""
        cx, cy = self.camera.principal_point
        x, y = pixel_offsets(self.camera)
        pixel = np.stack(np.broadcast_arrays(x + cx, y + cy), axis=-1)
        pi = motion_field(
            self.camera, self.motion.v, self.motion.omega, pixel, depth.data
        )
        worst = float(np.abs(self.timing.gamma * pi[..., 1]).max())
        if worst >= self.camera.height:
            raise ConfigError(
                f"vertical motion reaches the readout singularity: "
                f"max |gamma*pi_v| = {worst:.1f} px >= h = {self.camera.height}"
            )


_TOP_KEYS = {
    "width",
    "height",
    "focal",
    "principal",
    "gamma",
    "v",
    "omega",
    "k",
    "frames",
    "texture",
    "texture_seed",
    "plane_depth",
    "depth_ramp",
    "gs_scanlines",
}
_RAMP_KEYS = {"z0", "dz_dx", "dz_dy"}


def _require(table: dict, key: str):
    if key not in table:
        raise ConfigError(f"missing required key '{key}'")
    return table[key]


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def _vector3(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"'{key}' must be a list of 3 numbers")
    return np.array([_number(x, key) for x in value])


def _load_texture(selector, seed: int, camera: CameraModel, base_dir: Path) -> np.ndarray:
    if not isinstance(selector, str):
        raise ConfigError(f"'texture' must be a string, got {selector!r}")
    if selector == "fourier":
        return fourier_texture(camera.height, camera.width, seed)
    if selector == "checker":
        return checker_texture(camera.height, camera.width)
    path = base_dir / selector
    if not path.is_file():
        raise ConfigError(f"texture file not found: {path}")
    img = read_png(path)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.shape[:2] != (camera.height, camera.width):
        raise ConfigError(
            f"texture file is {img.shape[1]}x{img.shape[0]}, camera needs "
            f"{camera.width}x{camera.height}"
        )
    return img.astype(np.float64) / 255.0


def scene_from_dict(raw: dict, base_dir: Path = Path(".")) -> Scene:
    """Build and validate a Scene from a parsed config mapping."""
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    width = int(_number(_require(raw, "width"), "width"))
    height = int(_number(_require(raw, "height"), "height"))
    focal = _number(_require(raw, "focal"), "focal")
    if "principal" in raw:
        pp = raw["principal"]
        if not isinstance(pp, list) or len(pp) != 2:
            raise ConfigError("'principal' must be a list of 2 numbers")
        principal = (_number(pp[0], "principal"), _number(pp[1], "principal"))
    else:
        principal = ((width - 1) / 2.0, (height - 1) / 2.0)
    camera = CameraModel(
        focal_length=focal, principal_point=principal, width=width, height=height
    )

    timing = RsTiming(gamma=_number(_require(raw, "gamma"), "gamma"))
    k = _number(raw.get("k", 0.0), "k")
    if not (K_MIN <= k <= K_MAX):
        raise ConfigError(f"k = {k} outside the supported range [{K_MIN}, {K_MAX}]")
    motion = MotionState(
        v=_vector3(_require(raw, "v"), "v"),
        omega=_vector3(_require(raw, "omega"), "omega"),
        k=k,
    )

    has_const = "plane_depth" in raw
    has_ramp = "depth_ramp" in raw
    if has_const == has_ramp:
        raise ConfigError("exactly one of 'plane_depth' or '[depth_ramp]' is required")
    if has_const:
        plane = DepthRamp(z0=_number(raw["plane_depth"], "plane_depth"))
    else:
        ramp = raw["depth_ramp"]
        if not isinstance(ramp, dict):
            raise ConfigError("'depth_ramp' must be a table")
        bad = set(ramp) - _RAMP_KEYS
        if bad:
            raise ConfigError(f"unknown depth_ramp keys: {sorted(bad)}")
        plane = DepthRamp(
            z0=_number(_require(ramp, "z0"), "z0"),
            dz_dx=_number(ramp.get("dz_dx", 0.0), "dz_dx"),
            dz_dy=_number(ramp.get("dz_dy", 0.0), "dz_dy"),
        )

    seed = int(_number(raw.get("texture_seed", 0), "texture_seed"))
    texture = _load_texture(raw.get("texture", "fourier"), seed, camera, base_dir)

    scanlines = raw.get("gs_scanlines", [height / 2.0])
    if not isinstance(scanlines, list) or not scanlines:
        raise ConfigError("'gs_scanlines' must be a nonempty list of numbers")
    gs_scanlines = tuple(_number(s, "gs_scanlines") for s in scanlines)
    for s in gs_scanlines:
        if not (0 <= s <= height - 1):
            raise ConfigError(f"gs_scanlines entry {s} outside [0, {height - 1}]")

    frames = int(_number(raw.get("frames", 2), "frames"))
    return Scene(
        texture=texture,
        camera=camera,
        timing=timing,
        motion=motion,
        plane=plane,
        frame_count=frames,
        gs_scanlines=gs_scanlines,
    )


def load_scene(path) -> Scene:
    """Load and validate a scene config from a TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return scene_from_dict(raw, base_dir=path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
