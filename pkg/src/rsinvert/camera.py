"""Core value types: camera intrinsics, shutter timing, and motion state.

Conventions used throughout the package:

- Pixel coordinates are zero-based with x to the right and y downward.
  Scanline 0 is the top row and is exposed first. Pixel centers sit on
  integer coordinates.
- The math of the motion field works in coordinates relative to the
  principal point with the focal length in pixels; public functions take
  absolute pixel coordinates and shift internally.
- Scanline indices s are real-valued. The middle scanline is h/2 (h even in
  all stock scenes).
- The readout ratio gamma (readout duration of one frame divided by the
  inter-frame period) is stored positive. Backward-direction operations
  negate it internally, so callers always describe the forward inter-frame
  motion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DegenerateAcceleration


class Direction(Enum):
    """Temporal direction of a cross-frame quantity.

    FORWARD maps frame 1 content toward frame 2 time, BACKWARD the reverse.
    Backward operations use the negated motion and a negated readout ratio.
    """

    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics. focal_length in pixels, principal_point (cx, cy)."""

    focal_length: float
    principal_point: tuple[float, float]
    width: int
    height: int

    def __post_init__(self):
        if not self.focal_length > 0:
            raise ConfigError(f"focal_length must be > 0, got {self.focal_length}")
        if self.width < 2 or self.height < 2:
            raise ConfigError(
                f"image must be at least 2x2, got {self.width}x{self.height}"
            )
        cx, cy = self.principal_point
        if not (0.0 <= cx <= self.width - 1 and 0.0 <= cy <= self.height - 1):
            raise ConfigError(
                f"principal point {self.principal_point} outside "
                f"{self.width}x{self.height} image"
            )

    @property
    def middle_scanline(self) -> float:
        return self.height / 2.0


@dataclass(frozen=True)
class RsTiming:
    """Rolling-shutter timing. gamma = row readout span / inter-frame period."""

    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class MotionState:
    """Inter-frame camera motion between the two first scanlines.

    v is the translational velocity (scene units per frame interval), omega
    the rotational velocity (radians per frame interval, rotation-vector
    axes). k is the unitless acceleration shape parameter; k = 0 means
    constant velocity, k > 0 speeding up, k < 0 slowing down. k = -2 makes
    the time weighting degenerate and is rejected.
    """

    v: np.ndarray
    omega: np.ndarray
    k: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64).reshape(3)
        omega = np.asarray(self.omega, dtype=np.float64).reshape(3)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "omega", omega)
        if self.k == -2.0:
            raise DegenerateAcceleration("k = -2 is degenerate")

    def adjusted(self, direction: Direction) -> tuple[np.ndarray, np.ndarray]:
        """Return (v, omega) negated for BACKWARD, unchanged for FORWARD."""
        if direction is Direction.BACKWARD:
            return -self.v, -self.omega
        return self.v, self.omega


def signed_gamma(timing: RsTiming, direction: Direction) -> float:
    """Readout ratio with the backward sign convention applied."""
    return timing.gamma if direction is Direction.FORWARD else -timing.gamma


# Guard bands for per-pixel degeneracies. The singularity guard scales with
# the image height because the singular surface is h - gamma*pi_v = 0; the
# propagation pole guard is in scanline units.
SINGULARITY_GUARD_SCALE = 1e-6
PROPAGATION_POLE_GUARD = 1e-6

# Range accepted for the acceleration parameter by estimation and the CLI.
K_MIN, K_MAX = -1.9, 10.0
