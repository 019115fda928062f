"""Readers and writers for flow (.flo), depth (PFM), and image (PNG) files.

All payloads round-trip bit-exactly at their native precision: .flo and PFM
store 32-bit floats, PNG stores 8-bit channels. Readers validate headers and
refuse malformed files instead of guessing.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .camera import Direction
from .errors import BadMagic, DecodeError, DimensionMismatch, TruncatedFile, UnsupportedVariant
from .fields import DepthMap, FlowField, FlowKind

FLO_MAGIC = 202021.25
_MAX_DIM = 100_000


# ---------------------------------------------------------------------------
# Middlebury .flo


def write_flo(path, flow: FlowField) -> None:
    """Write a flow field in Middlebury .flo format (little-endian float32)."""
    h, w = flow.height, flow.width
    with open(path, "wb") as fh:
        fh.write(np.asarray([FLO_MAGIC], dtype="<f4").tobytes())
        fh.write(np.asarray([w, h], dtype="<i4").tobytes())
        fh.write(flow.data.astype("<f4").tobytes())


def read_flo(
    path,
    kind: FlowKind = FlowKind.OPTICAL,
    direction: Direction = Direction.FORWARD,
    target_scanline: float | None = None,
) -> FlowField:
    """Read a Middlebury .flo file.

    The format carries no semantics beyond (u, v) per pixel, so the caller
    states what the field means via kind / direction / target_scanline.
    """
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 4:
            raise TruncatedFile(f"{path}: shorter than the 4-byte sentinel")
        magic = np.frombuffer(head[:4], dtype="<f4")[0]
        if magic != np.float32(FLO_MAGIC):
            raise BadMagic(f"{path}: sentinel {magic!r} is not {FLO_MAGIC}")
        if len(head) < 12:
            raise TruncatedFile(f"{path}: header ends before width/height")
        w, h = (int(x) for x in np.frombuffer(head[4:12], dtype="<i4"))
        if not (0 < w <= _MAX_DIM and 0 < h <= _MAX_DIM):
            raise DecodeError(f"{path}: implausible dimensions {w}x{h}")
        payload = fh.read(h * w * 2 * 4 + 1)
    if len(payload) < h * w * 2 * 4:
        raise TruncatedFile(
            f"{path}: payload holds {len(payload)} bytes, expected {h * w * 8}"
        )
    if len(payload) > h * w * 2 * 4:
        raise DecodeError(f"{path}: trailing bytes after the flow payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, 2).astype(np.float64)
    return FlowField(
        data=data, kind=kind, direction=direction, target_scanline=target_scanline
    )


# ---------------------------------------------------------------------------
# PFM (grayscale float)


def write_pfm(path, depth: DepthMap) -> None:
    """Write a depth map as grayscale PFM, little-endian (negative scale)."""
    data = depth.data.astype("<f4")
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(data[::-1].tobytes())  # PFM stores rows bottom to top


def _read_pfm_token(fh, path) -> bytes:
    """Read one whitespace-delimited header token."""
    token = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise TruncatedFile(f"{path}: header ends mid-token")
        if ch.isspace():
            if token:
                return token
            continue
        token += ch
        if len(token) > 32:
            raise DecodeError(f"{path}: header token longer than 32 bytes")


def read_pfm(path) -> DepthMap:
    """Read a grayscale PFM file into a DepthMap (values kept as stored)."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
        if len(magic) < 2:
            raise TruncatedFile(f"{path}: shorter than the 2-byte magic")
        if magic == b"PF":
            raise UnsupportedVariant(f"{path}: color PFM not supported, expected Pf")
        if magic != b"Pf":
            raise BadMagic(f"{path}: magic {magic!r} is not Pf")
        try:
            w = int(_read_pfm_token(fh, path))
            h = int(_read_pfm_token(fh, path))
            scale = float(_read_pfm_token(fh, path))
        except ValueError as exc:
            raise DecodeError(f"{path}: malformed header field: {exc}") from exc
        if not (0 < w <= _MAX_DIM and 0 < h <= _MAX_DIM):
            raise DecodeError(f"{path}: implausible dimensions {w}x{h}")
        if scale == 0.0:
            raise DecodeError(f"{path}: zero scale")
        payload = fh.read(h * w * 4)
    if len(payload) < h * w * 4:
        raise TruncatedFile(
            f"{path}: payload holds {len(payload)} bytes, expected {h * w * 4}"
        )
    endian = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=endian).reshape(h, w)[::-1]
    data = data.astype(np.float64) * abs(scale)
    return DepthMap(data=data)


# ---------------------------------------------------------------------------
# PNG


def write_png(path, image: np.ndarray) -> None:
    """Write an image as 8-bit PNG.

    Float images are taken in [0, 1] and quantized by rounding; uint8 images
    pass through untouched. 2-D arrays become grayscale, (h, w, 3) RGB.
    """
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
        arr = np.round(arr * 255.0).astype(np.uint8)
    if arr.ndim == 2:
        Image.fromarray(arr, mode="L").save(path, format="PNG")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")
    else:
        raise DimensionMismatch(f"cannot encode array of shape {arr.shape} as PNG")


def read_png(path) -> np.ndarray:
    """Read a PNG into a uint8 array, (h, w) grayscale or (h, w, 3) RGB."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            return np.asarray(img, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
