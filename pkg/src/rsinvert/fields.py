"""Gridded field containers: flow fields, depth maps, correlation maps.

All grids are (height, width) row-major, matching image layout. Flow vectors
are stored as (..., 2) with [,..., 0] the horizontal component (u, positive
right) and [..., 1] the vertical component (v, positive down), in pixels.
Every container carries a boolean validity mask; dense operations push
per-pixel degeneracies into that mask instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch
from .camera import Direction


class FlowKind(Enum):
    OPTICAL = "optical"
    UNDISTORTION = "undistortion"


def _default_valid(shape) -> np.ndarray:
    return np.ones(shape, dtype=bool)


@dataclass
class FlowField:
    """A dense 2D displacement field.

    kind OPTICAL: displacement from one RS frame to the other.
    kind UNDISTORTION: displacement from an RS frame onto the virtual GS
    canvas at `target_scanline`; pixels already on that scanline move by
    zero. `direction` records which frame the source pixels belong to
    (FORWARD = frame 1, BACKWARD = frame 2).
    """

    data: np.ndarray
    kind: FlowKind
    direction: Direction
    target_scanline: float | None = None
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise DimensionMismatch(
                f"flow data must be (h, w, 2), got {self.data.shape}"
            )
        if self.kind is FlowKind.UNDISTORTION:
            if self.target_scanline is None:
                raise DimensionMismatch("undistortion flow needs a target scanline")
        elif self.target_scanline is not None:
            raise DimensionMismatch("optical flow must not carry a target scanline")
        if self.valid is None:
            self.valid = _default_valid(self.data.shape[:2])
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.data.shape[:2]:
                raise DimensionMismatch(
                    f"valid mask {self.valid.shape} does not match "
                    f"flow grid {self.data.shape[:2]}"
                )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def u(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.data[..., 1]


@dataclass
class DepthMap:
    """Per-pixel scene depth in the camera that observes the grid."""

    data: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DimensionMismatch(f"depth must be (h, w), got {self.data.shape}")
        if self.valid is None:
            # Nonpositive or non-finite depths are unusable by construction.
            self.valid = np.isfinite(self.data) & (self.data > 0)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.data.shape:
                raise DimensionMismatch(
                    f"valid mask {self.valid.shape} does not match "
                    f"depth grid {self.data.shape}"
                )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class CorrelationMap:
    """Per-pixel scale tying optical flow to undistortion flow.

    Multiplying the optical flow by this map yields the undistortion flow
    onto the GS canvas at `target_scanline` for the given direction.
    """

    data: np.ndarray
    target_scanline: float
    direction: Direction
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DimensionMismatch(
                f"correlation map must be (h, w), got {self.data.shape}"
            )
        if self.valid is None:
            self.valid = _default_valid(self.data.shape)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.data.shape:
                raise DimensionMismatch(
                    f"valid mask {self.valid.shape} does not match "
                    f"map grid {self.data.shape}"
                )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]
