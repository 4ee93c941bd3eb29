"""TIFF sink: constant-size header, tag layout, PIL-verified decode."""

import io
import struct
from fractions import Fraction

import numpy as np
import pytest
from PIL import Image

from clgrab.acquisition import FrameInfo
from clgrab.camera import Frame
from clgrab.tiff import (
    TIFF_HEADER_SIZE,
    BadGeometryError,
    FrameMismatchError,
    build_tiff_header,
    frame_filename,
    write_frame_tiff,
)


def info_for(frame: Frame, number: int = 0) -> FrameInfo:
    return FrameInfo(number, frame.width, frame.height, frame.bits_per_pixel,
                     frame.byte_count, Fraction(0))


class TestHeader:
    def test_leading_bytes(self):
        header = build_tiff_header(640, 480, 8)
        assert header[:8].hex(" ").upper() == "49 49 2A 00 08 00 00 00"

    def test_constant_size(self):
        for w, h, d in [(1, 1, 8), (65535, 32767, 16), (1024, 768, 12)]:
            assert len(build_tiff_header(w, h, d)) == TIFF_HEADER_SIZE

    def test_tags_ascending(self):
        header = build_tiff_header(64, 32, 8)
        count = struct.unpack_from("<H", header, 8)[0]
        assert count == 8
        tags = [struct.unpack_from("<H", header, 10 + 12 * i)[0] for i in range(count)]
        assert tags == sorted(tags) == [256, 257, 258, 259, 262, 273, 277, 279]

    def test_entry_values(self):
        header = build_tiff_header(64, 32, 12)
        entries = {}
        for i in range(8):
            tag, kind, n, value = struct.unpack_from("<HHII", header, 10 + 12 * i)
            if kind == 3:
                value &= 0xFFFF
            entries[tag] = value
            assert n == 1
        assert entries[256] == 64          # width
        assert entries[257] == 32          # height
        assert entries[258] == 16          # container bits for 12-bit pixels
        assert entries[259] == 1           # uncompressed
        assert entries[262] == 1           # black is zero
        assert entries[273] == 256         # strip starts right after the header
        assert entries[277] == 1
        assert entries[279] == 64 * 32 * 2

    def test_no_next_ifd_and_zero_padding(self):
        header = build_tiff_header(8, 8, 8)
        assert struct.unpack_from("<I", header, 10 + 8 * 12)[0] == 0
        assert header[10 + 8 * 12 + 4:] == b"\x00" * (TIFF_HEADER_SIZE - 110)

    def test_bad_geometry(self):
        for w, h, d in [(0, 1, 8), (1, 0, 8), (1, 1, 9), (1, 1, 24),
                        (65536, 65536, 8)]:
            with pytest.raises(BadGeometryError):
                build_tiff_header(w, h, d)


class TestWriteFrame:
    @pytest.mark.parametrize("depth", [8, 10, 12, 16])
    def test_pil_pixel_exact(self, depth):
        rng = np.random.default_rng(depth)
        w, h = 31, 17
        dtype = np.uint8 if depth == 8 else np.uint16
        pixels = rng.integers(0, 1 << depth, w * h).astype(dtype)
        frame = Frame(w, h, depth, pixels)
        blob = write_frame_tiff(info_for(frame), frame)
        assert len(blob) == TIFF_HEADER_SIZE + frame.byte_count
        image = Image.open(io.BytesIO(blob))
        assert image.size == (w, h)
        decoded = np.asarray(image).ravel()
        assert np.array_equal(decoded, pixels)

    def test_mismatch_byte_count(self):
        frame = Frame(4, 4, 8, np.zeros(16, np.uint8))
        info = FrameInfo(0, 4, 4, 8, 17, Fraction(0))
        with pytest.raises(FrameMismatchError):
            write_frame_tiff(info, frame)

    def test_mismatch_geometry(self):
        frame = Frame(4, 4, 8, np.zeros(16, np.uint8))
        info = FrameInfo(0, 8, 2, 8, 16, Fraction(0))
        with pytest.raises(FrameMismatchError):
            write_frame_tiff(info, frame)

    def test_16bit_little_endian_strip(self):
        frame = Frame(2, 1, 16, np.array([0x0102, 0x0304], np.uint16))
        blob = write_frame_tiff(info_for(frame), frame)
        assert blob[256:] == b"\x02\x01\x04\x03"


class TestFilename:
    def test_format(self):
        assert frame_filename(0) == "frame_000000.tif"
        assert frame_filename(1234567) == "frame_1234567.tif"
