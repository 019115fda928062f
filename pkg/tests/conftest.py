"""Shared scene fixtures.

Two planar scenes cover most tests:

* ``small_scene``: 160x128, fast to render, used by unit tests that need a
  real RS pair but do not care about absolute quality numbers.
* ``bench_scene``: 320x256 with >= 20 px max flow, the scene the acceptance
  suite measures.  Session-scoped because composing RS frames and ground
  truth flow dominates test runtime.

Both use in-plane translation plus a mild roll so the first-order flow model
stays well inside its accuracy envelope (model-vs-render error < 0.1 px).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from rsinvert import (
    CameraModel,
    DepthRamp,
    FlowField,
    MotionState,
    RsTiming,
    Scene,
    compose_rs,
    fourier_texture,
    gt_optical_flow,
)
from rsinvert.simulate import RsFrame


@dataclass(frozen=True)
class RenderedPair:
    """A scene with its composed RS pair and ground-truth flows."""

    scene: Scene
    rs1: RsFrame
    rs2: RsFrame
    flow_fwd: FlowField
    flow_bwd: FlowField

    @property
    def camera(self) -> CameraModel:
        return self.scene.camera

    @property
    def timing(self) -> RsTiming:
        return self.scene.timing


def _render(scene: Scene) -> RenderedPair:
    rs1 = compose_rs(scene, 1)
    rs2 = compose_rs(scene, 2)
    fwd, bwd = gt_optical_flow(scene)
    return RenderedPair(scene=scene, rs1=rs1, rs2=rs2, flow_fwd=fwd, flow_bwd=bwd)


def make_bench_scene(k: float = 0.0, seed: int = 11) -> Scene:
    """The 320x256 acceptance scene; max GT flow magnitude is ~21.8 px."""
    camera = CameraModel(
        focal_length=260.0,
        principal_point=(159.5, 127.5),
        width=320,
        height=256,
    )
    return Scene(
        texture=fourier_texture(256, 320, seed=seed),
        camera=camera,
        timing=RsTiming(gamma=1.0),
        motion=MotionState(
            v=np.array([0.162, 0.05, 0.0]),
            omega=np.array([0.0, 0.0, 0.002]),
            k=k,
        ),
        plane=DepthRamp(z0=2.0),
    )


def make_small_scene(
    gamma: float = 1.0,
    k: float = 0.0,
    vx: float = 0.09,
    vy: float = 0.03,
    seed: int = 4,
) -> Scene:
    camera = CameraModel(
        focal_length=130.0,
        principal_point=(79.5, 63.5),
        width=160,
        height=128,
    )
    return Scene(
        texture=fourier_texture(128, 160, seed=seed, cutoff_cycles=6.0),
        camera=camera,
        timing=RsTiming(gamma=gamma),
        motion=MotionState(
            v=np.array([vx, vy, 0.0]),
            omega=np.array([0.0, 0.0, 0.001]),
            k=k,
        ),
        plane=DepthRamp(z0=2.0, dz_dx=0.0008, dz_dy=0.0),
    )


@pytest.fixture(scope="session")
def bench_pair() -> RenderedPair:
    return _render(make_bench_scene())


@pytest.fixture(scope="session")
def small_pair() -> RenderedPair:
    return _render(make_small_scene())


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)
