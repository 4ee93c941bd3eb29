"""Acquisition pipeline: bounded FIFO over a byte ring, frame-fit monitor,
resolution detection with timestamping, and the frame reader that regenerates
synchronization signals.

Frames are admitted all-or-nothing: the fit monitor predicts the next frame
size from the largest of the last captured frames (seeded by a configured
maximum) and requires one page of slack; a frame that would not actually fit
is dropped whole. Sync signals are never stored - only the LVAL- and
DVAL-qualified pixel payload, packed into 1-byte (8-bit) or little-endian
2-byte containers.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import _kernels
from .camera import Frame
from .taps import CLConfig, VideoStream

DEFAULT_CAPACITY_BYTES = 64 * 1024 * 1024
DEFAULT_PAGE_BYTES = 4096
FIT_HISTORY_WINDOW = 8


class RaggedLinesError(ValueError):
    """Lines within one frame carry unequal valid-pixel counts."""


class EmptyFrameError(ValueError):
    """An FVAL span contains no LVAL-high clock."""


class FifoUnderflowError(Exception):
    """Frame read attempted with an empty frame-info FIFO."""


class CorruptInfoError(Exception):
    """Frame info announces more bytes than the FIFO holds."""


@dataclass(frozen=True)
class FrameInfo:
    frame_number: int
    width: int
    height: int
    bits_per_pixel: int
    byte_count: int
    timestamp_ns: Fraction
    user_meta: int = 0


@dataclass
class AcqStats:
    frames_captured: int = 0
    frames_dropped: int = 0
    bytes_written: int = 0
    high_watermark_bytes: int = 0


class VFifo:
    """Bounded byte FIFO over a fixed ring, safe for one writer + one reader."""

    def __init__(self, capacity_bytes: int = DEFAULT_CAPACITY_BYTES,
                 page_bytes: int = DEFAULT_PAGE_BYTES):
        if capacity_bytes <= 0 or page_bytes <= 0 or capacity_bytes % page_bytes:
            raise ValueError("capacity must be a positive multiple of the page size")
        self.capacity_bytes = capacity_bytes
        self.page_bytes = page_bytes
        self._buf = np.empty(capacity_bytes, dtype=np.uint8)
        self._read = 0
        self._write = 0
        self._used = 0
        self._high_watermark = 0
        self._lock = threading.Lock()

    @property
    def used_bytes(self) -> int:
        with self._lock:
            return self._used

    @property
    def free_bytes(self) -> int:
        with self._lock:
            return self.capacity_bytes - self._used

    @property
    def high_watermark_bytes(self) -> int:
        with self._lock:
            return self._high_watermark

    def write(self, data: np.ndarray) -> None:
        n = len(data)
        with self._lock:
            if n > self.capacity_bytes - self._used:
                raise OverflowError(f"{n} bytes exceed free space")
            first = min(n, self.capacity_bytes - self._write)
            self._buf[self._write:self._write + first] = data[:first]
            if n > first:
                self._buf[:n - first] = data[first:]
            self._write = (self._write + n) % self.capacity_bytes
            self._used += n
            self._high_watermark = max(self._high_watermark, self._used)

    def read(self, n: int) -> np.ndarray:
        with self._lock:
            if n > self._used:
                raise ValueError(f"read of {n} bytes but only {self._used} buffered")
            first = min(n, self.capacity_bytes - self._read)
            out = np.empty(n, dtype=np.uint8)
            out[:first] = self._buf[self._read:self._read + first]
            if n > first:
                out[first:] = self._buf[:n - first]
            self._read = (self._read + n) % self.capacity_bytes
            self._used -= n
            return out


def _line_runs(lval: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.zeros(len(lval) + 2, dtype=np.int8)
    padded[1:-1] = lval
    edges = np.diff(padded)
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def detect_resolution(span: VideoStream, taps: int) -> tuple[int, int]:
    """Resolution of one FVAL-high span: (width, height).

    Width counts only LVAL- and DVAL-qualified clocks of the first line, times
    the tap count; height is the number of LVAL-high runs.
    """
    starts, _ = _line_runs(span.lval)
    if len(starts) == 0:
        raise EmptyFrameError("no LVAL-high clock in FVAL span")
    valid = span.lval & span.dval
    counts = np.add.reduceat(valid, starts)
    if np.any(counts != counts[0]):
        raise RaggedLinesError(f"unequal line lengths: {sorted(set(counts.tolist()))}")
    return taps * int(counts[0]), len(starts)


def check_fit(free_bytes: int, expected_frame_bytes: int,
              page_bytes: int = DEFAULT_PAGE_BYTES) -> bool:
    """Accept (True) iff the expected frame plus one page of slack fits."""
    return free_bytes >= expected_frame_bytes + page_bytes


class AcquisitionWriter:
    """Camera-side pipeline stage: frames from a video stream into the VFifo.

    Carries state across calls so a stream may arrive in chunks; a frame cut
    off mid-FVAL at a chunk boundary is held until the rest arrives.
    """

    def __init__(self, vfifo: VFifo, config: CLConfig, max_frame_bytes: int,
                 user_meta: int = 0, history_window: int = FIT_HISTORY_WINDOW):
        self.vfifo = vfifo
        self.config = config
        self.max_frame_bytes = max_frame_bytes
        self.user_meta = user_meta
        self.info_fifo: deque[FrameInfo] = deque()
        self._history: deque[int] = deque(maxlen=history_window)
        self._stats = AcqStats()
        self._stats_lock = threading.Lock()
        self._cycle = 0
        self._carry: VideoStream | None = None
        self._frame_number = 0
        self._scratch = np.empty(0, dtype=config.container_dtype)

    @property
    def stats(self) -> AcqStats:
        with self._stats_lock:
            return replace(self._stats)

    def expected_frame_bytes(self) -> int:
        return max(self._history) if self._history else self.max_frame_bytes

    def process(self, stream: VideoStream) -> AcqStats:
        if self._carry is not None:
            stream = VideoStream.concatenate([self._carry, stream])
            self._cycle -= len(self._carry)
            self._carry = None
        chunk_start = self._cycle
        fval = stream.fval
        n = len(fval)
        padded = np.zeros(n + 2, dtype=np.int8)
        padded[1:-1] = fval
        edges = np.diff(padded)
        rising = np.flatnonzero(edges == 1)
        falling = np.flatnonzero(edges == -1)
        if len(rising) and fval[-1]:
            # incomplete trailing frame: keep it for the next chunk
            cut = int(rising[-1])
            self._carry = stream[cut:]
            rising, falling = rising[:-1], falling[:-1]
            self._cycle = chunk_start + cut
        else:
            self._cycle = chunk_start + n
        for rise, fall in zip(rising, falling):
            self._capture(stream[int(rise):int(fall)], chunk_start + int(rise))
        return self.stats

    def _capture(self, span: VideoStream, cycle: int) -> None:
        timestamp = Fraction(cycle * 1_000_000_000, self.config.pixel_clock_hz)
        taps = self.config.taps_per_clock
        if len(self._scratch) < len(span) * taps:
            self._scratch = np.empty(len(span) * taps,
                                     dtype=self.config.container_dtype)
        clocks_per_line, height, pixel_count, ragged = _kernels.frame_scan(
            span.lval, span.dval, np.ascontiguousarray(span.pixels), self._scratch
        )
        if ragged or height == 0 or clocks_per_line == 0:
            self._drop()
            return
        width = taps * clocks_per_line
        if not check_fit(self.vfifo.free_bytes, self.expected_frame_bytes(),
                         self.vfifo.page_bytes):
            self._drop()
            return
        payload = self._scratch[:pixel_count]
        if self.config.container_bytes == 1:
            data = payload
        else:
            data = payload.astype("<u2").view(np.uint8)
        if len(data) > self.vfifo.free_bytes:
            # prediction was too optimistic; still never overflow or tear
            self._drop()
            return
        self.vfifo.write(data)
        info = FrameInfo(
            frame_number=self._frame_number,
            width=width,
            height=height,
            bits_per_pixel=self.config.bits_per_pixel,
            byte_count=len(data),
            timestamp_ns=timestamp,
            user_meta=self.user_meta,
        )
        self.info_fifo.append(info)
        self._frame_number += 1
        self._history.append(len(data))
        with self._stats_lock:
            self._stats.frames_captured += 1
            self._stats.bytes_written += len(data)
            self._stats.high_watermark_bytes = max(
                self._stats.high_watermark_bytes, self.vfifo.high_watermark_bytes
            )

    def _drop(self) -> None:
        with self._stats_lock:
            self._stats.frames_dropped += 1


def frame_read(vfifo: VFifo, info_fifo: deque[FrameInfo], taps: int = 1,
               with_stream: bool = True
               ) -> tuple[FrameInfo, Frame, VideoStream | None]:
    """Pop one frame: its info record, pixel data, and regenerated sync.

    Regenerated timing: LVAL=DVAL high for width/taps clocks per line, one
    blank clock between lines, FVAL high across the whole frame. Pass
    ``with_stream=False`` to skip the sync regeneration when only the pixel
    payload is needed.
    """
    if not info_fifo:
        raise FifoUnderflowError("frame info FIFO is empty")
    info = info_fifo[0]
    if info.byte_count > vfifo.used_bytes:
        raise CorruptInfoError(
            f"info says {info.byte_count} bytes but FIFO holds {vfifo.used_bytes}"
        )
    info_fifo.popleft()
    data = vfifo.read(info.byte_count)
    if info.bits_per_pixel == 8:
        pixels = data
    else:
        pixels = data.view("<u2").astype(np.uint16)
    frame = Frame(info.width, info.height, info.bits_per_pixel, pixels)
    if not with_stream:
        return info, frame, None

    clocks_per_line = info.width // taps
    total = info.height * clocks_per_line + (info.height - 1)
    out_pixels = np.zeros((total, taps), dtype=pixels.dtype)
    lval = np.zeros(total, dtype=bool)
    line_starts = np.arange(info.height) * (clocks_per_line + 1)
    active = (line_starts[:, None] + np.arange(clocks_per_line)).ravel()
    out_pixels[active] = pixels.reshape(info.height * clocks_per_line, taps)
    lval[active] = True
    stream = VideoStream(
        pixels=out_pixels,
        lval=lval,
        fval=np.ones(total, dtype=bool),
        dval=lval.copy(),
    )
    return info, frame, stream
