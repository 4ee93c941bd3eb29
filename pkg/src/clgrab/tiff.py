"""Baseline grayscale TIFF header provider and per-frame file assembly.

The header is a constant 256 bytes regardless of geometry, so it can be
emitted before the frame data arrives: little-endian byte order mark, one IFD
with eight entries (tags ascending), a single strip starting at offset 256,
and zero padding. 10/12-bit frames are stored as right-justified 16-bit
containers; the true depth travels in the frame metadata, not the file.
"""

from __future__ import annotations

import struct

from .acquisition import FrameInfo
from .camera import Frame

TIFF_HEADER_SIZE = 256

_LONG = 4
_SHORT = 3

TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_STRIP_BYTE_COUNTS = 279


class BadGeometryError(ValueError):
    """Width/height below 1 or unsupported bit depth."""


class FrameMismatchError(ValueError):
    """Frame info and frame pixel data disagree."""


def container_bits(bits_per_pixel: int) -> int:
    return 8 if bits_per_pixel == 8 else 16


def _entry(tag: int, kind: int, value: int) -> bytes:
    if kind == _SHORT:
        return struct.pack("<HHIHH", tag, kind, 1, value, 0)
    return struct.pack("<HHII", tag, kind, 1, value)


def build_tiff_header(width: int, height: int, bits_per_pixel: int) -> bytes:
    """256-byte baseline TIFF header for one uncompressed grayscale strip."""
    if width < 1 or height < 1 or bits_per_pixel not in (8, 10, 12, 16):
        raise BadGeometryError(f"bad geometry {width}x{height}@{bits_per_pixel}")
    cbits = container_bits(bits_per_pixel)
    strip_bytes = width * height * (cbits // 8)
    if strip_bytes > 0xFFFFFFFF:
        raise BadGeometryError(
            f"{strip_bytes}-byte strip exceeds the 32-bit TIFF field limit"
        )
    entries = [
        _entry(TAG_IMAGE_WIDTH, _LONG, width),
        _entry(TAG_IMAGE_LENGTH, _LONG, height),
        _entry(TAG_BITS_PER_SAMPLE, _SHORT, cbits),
        _entry(TAG_COMPRESSION, _SHORT, 1),       # none
        _entry(TAG_PHOTOMETRIC, _SHORT, 1),       # black is zero
        _entry(TAG_STRIP_OFFSETS, _LONG, TIFF_HEADER_SIZE),
        _entry(TAG_SAMPLES_PER_PIXEL, _SHORT, 1),
        _entry(TAG_STRIP_BYTE_COUNTS, _LONG, strip_bytes),
    ]
    header = (
        b"II" + struct.pack("<HI", 42, 8)         # magic, first-IFD offset
        + struct.pack("<H", len(entries))
        + b"".join(entries)
        + struct.pack("<I", 0)                    # no next IFD
    )
    return header.ljust(TIFF_HEADER_SIZE, b"\x00")


def write_frame_tiff(info: FrameInfo, frame: Frame) -> bytes:
    """Header plus row-major little-endian pixel data; length 256 + byte_count."""
    if info.byte_count != frame.byte_count or (info.width, info.height) != (
        frame.width,
        frame.height,
    ):
        raise FrameMismatchError(
            f"info {info.width}x{info.height}/{info.byte_count}B vs frame "
            f"{frame.width}x{frame.height}/{frame.byte_count}B"
        )
    return build_tiff_header(info.width, info.height, info.bits_per_pixel) + frame.to_bytes()


def frame_filename(frame_number: int) -> str:
    return f"frame_{frame_number:06d}.tif"
