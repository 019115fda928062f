"""Byte-level tests for the .flo, PFM, and PNG codecs.

The .flo layout is the Middlebury one: float32 sentinel 202021.25, int32
width, int32 height, then row-major interleaved (u, v) float32, all
little-endian.  PFM is grayscale "Pf" with bottom-to-top rows and the
scale's sign carrying endianness (negative = little).  Both round-trip
bit-exactly; malformed headers are rejected, never guessed around.
"""

from __future__ import annotations

import struct

import numpy as np
import pytest

from rsinvert import (
    DepthMap,
    Direction,
    FlowField,
    FlowKind,
    read_flo,
    read_pfm,
    read_png,
    write_flo,
    write_pfm,
    write_png,
)
from rsinvert.errors import (
    BadMagic,
    DecodeError,
    DimensionMismatch,
    TruncatedFile,
    UnsupportedVariant,
)


class TestFlo:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        data = rng.standard_normal((20, 31, 2)).astype(np.float32).astype(np.float64)
        flow = FlowField(data=data, kind=FlowKind.OPTICAL, direction=Direction.FORWARD)
        path = tmp_path / "f.flo"
        write_flo(path, flow)
        back = read_flo(path)
        np.testing.assert_array_equal(back.data, data)
        assert back.kind is FlowKind.OPTICAL

    def test_two_by_one_field_is_28_bytes(self, tmp_path):
        # header 4 + 4 + 4 = 12 bytes, payload 2 px * 2 ch * 4 bytes = 16
        data = np.array([[[1.0, 2.0], [3.0, 4.0]]])  # shape (1, 2, 2): w=2, h=1
        flow = FlowField(data=data, kind=FlowKind.OPTICAL, direction=Direction.FORWARD)
        path = tmp_path / "tiny.flo"
        write_flo(path, flow)
        raw = path.read_bytes()
        assert len(raw) == 28
        magic, w, h = struct.unpack("<fii", raw[:12])
        assert magic == pytest.approx(202021.25)
        assert (w, h) == (2, 1)
        assert struct.unpack("<4f", raw[12:]) == (1.0, 2.0, 3.0, 4.0)

    def test_wrong_sentinel_rejected(self, tmp_path):
        path = tmp_path / "bad.flo"
        path.write_bytes(struct.pack("<fii", 123.456, 2, 1) + b"\0" * 16)
        with pytest.raises(BadMagic):
            read_flo(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "short.flo"
        path.write_bytes(struct.pack("<f", 202021.25))
        with pytest.raises(TruncatedFile):
            read_flo(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "cut.flo"
        path.write_bytes(struct.pack("<fii", 202021.25, 4, 4) + b"\0" * 10)
        with pytest.raises(TruncatedFile):
            read_flo(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "long.flo"
        path.write_bytes(struct.pack("<fii", 202021.25, 1, 1) + b"\0" * 8 + b"xx")
        with pytest.raises(DecodeError):
            read_flo(path)

    def test_implausible_dimensions_rejected(self, tmp_path):
        path = tmp_path / "dims.flo"
        path.write_bytes(struct.pack("<fii", 202021.25, -3, 1))
        with pytest.raises(DecodeError):
            read_flo(path)

    def test_read_as_undistortion_flow(self, tmp_path):
        data = np.zeros((4, 4, 2))
        flow = FlowField(data=data, kind=FlowKind.OPTICAL, direction=Direction.FORWARD)
        path = tmp_path / "u.flo"
        write_flo(path, flow)
        back = read_flo(path, kind=FlowKind.UNDISTORTION,
                        direction=Direction.BACKWARD, target_scanline=2.0)
        assert back.kind is FlowKind.UNDISTORTION
        assert back.direction is Direction.BACKWARD
        assert back.target_scanline == 2.0


class TestPfm:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        data = rng.uniform(0.5, 9.0, (13, 17)).astype(np.float32).astype(np.float64)
        path = tmp_path / "d.pfm"
        write_pfm(path, DepthMap(data=data))
        back = read_pfm(path)
        np.testing.assert_array_equal(back.data, data)

    def test_handcrafted_little_endian_fixture(self, tmp_path):
        # 2 wide, 2 tall, negative scale = little-endian, rows bottom-to-top:
        # the first stored row is the image's bottom row (3.0, 4.0).
        payload = struct.pack("<4f", 3.0, 4.0, 1.0, 2.0)
        path = tmp_path / "hand.pfm"
        path.write_bytes(b"Pf\n2 2\n-1.0\n" + payload)
        depth = read_pfm(path)
        np.testing.assert_array_equal(depth.data, [[1.0, 2.0], [3.0, 4.0]])

    def test_positive_scale_means_big_endian(self, tmp_path):
        payload = struct.pack(">4f", 3.0, 4.0, 1.0, 2.0)
        path = tmp_path / "big.pfm"
        path.write_bytes(b"Pf\n2 2\n1.0\n" + payload)
        depth = read_pfm(path)
        np.testing.assert_array_equal(depth.data, [[1.0, 2.0], [3.0, 4.0]])

    def test_color_variant_rejected(self, tmp_path):
        path = tmp_path / "color.pfm"
        path.write_bytes(b"PF\n1 1\n-1.0\n" + struct.pack("<3f", 1.0, 2.0, 3.0))
        with pytest.raises(UnsupportedVariant):
            read_pfm(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.pfm"
        path.write_bytes(b"Qx\n1 1\n-1.0\n" + b"\0" * 4)
        with pytest.raises(BadMagic):
            read_pfm(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "cut.pfm"
        path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\0" * 8)
        with pytest.raises(TruncatedFile):
            read_pfm(path)

    def test_garbled_dimension_rejected(self, tmp_path):
        path = tmp_path / "dim.pfm"
        path.write_bytes(b"Pf\ntwo 2\n-1.0\n" + b"\0" * 16)
        with pytest.raises(DecodeError):
            read_pfm(path)


class TestPng:
    def test_gray_uint8_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (21, 34), dtype=np.uint8)
        path = tmp_path / "g.png"
        write_png(path, img)
        np.testing.assert_array_equal(read_png(path), img)

    def test_color_uint8_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (15, 12, 3), dtype=np.uint8)
        path = tmp_path / "c.png"
        write_png(path, img)
        back = read_png(path)
        assert back.shape == (15, 12, 3)
        np.testing.assert_array_equal(back, img)

    def test_float_input_quantizes_to_uint8(self, tmp_path):
        img = np.linspace(0.0, 1.0, 256).reshape(16, 16)
        path = tmp_path / "f.png"
        write_png(path, img)
        back = read_png(path)
        expected = np.round(img * 255.0).astype(np.uint8)
        np.testing.assert_array_equal(back, expected)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "broken.png"
        path.write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        with pytest.raises(DecodeError):
            read_png(path)

    def test_bad_channel_count_rejected(self, tmp_path):
        with pytest.raises(DimensionMismatch):
            write_png(tmp_path / "x.png", np.zeros((4, 4, 2)))
