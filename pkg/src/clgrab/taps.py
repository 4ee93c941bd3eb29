"""Camera Link configurations and the pixel <-> link-word mapping.

Each pixel clock carries an 84-bit group (three 28-bit channel words X, Y, Z;
X in bits 0..27, Y in 28..55, Z in 56..83). Pixels fill the configuration's
data-bit region tap 0 first, each pixel least-significant-bit first:

* Base/Medium/Full: data bits are the port bytes A, B, C (bits 0..23) of each
  active channel, in channel order. The sync nibble (LVAL, FVAL, DVAL, spare)
  sits at bits 24..27 of every active channel; decoding reads it from X only.
* Deca (80-bit mode): data bits are X bits 0..23, then all 28 bits of Y, then
  all 28 bits of Z; the sync nibble sits at X bits 24..27 only.

10/12-bit pixels are right-justified in 16-bit containers downstream; the
true depth travels in the frame metadata.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

MAX_PIXEL_CLOCK_HZ = 85_000_000

GROUP_BITS = 84
GROUP_MASK = (1 << GROUP_BITS) - 1

LVAL_BIT = 24
FVAL_BIT = 25
DVAL_BIT = 26
SPARE_BIT = 27


class ConfigError(ValueError):
    """Unsupported mode/taps/depth/clock combination."""


class DepthOverflowError(ValueError):
    """A pixel value exceeds the configured bit depth."""


class CLMode(enum.Enum):
    BASE = "BASE"
    MEDIUM = "MEDIUM"
    FULL = "FULL"
    DECA = "DECA"


#: Supported (taps, depth) pairs per mode.
SUPPORTED_GEOMETRIES = {
    CLMode.BASE: {(1, 8), (2, 8), (3, 8), (1, 10), (1, 12), (1, 16)},
    CLMode.MEDIUM: {(4, 8)},
    CLMode.FULL: {(8, 8)},
    CLMode.DECA: {(10, 8)},
}

_MODE_CHANNELS = {
    CLMode.BASE: (0,),
    CLMode.MEDIUM: (0, 1),
    CLMode.FULL: (0, 1, 2),
    CLMode.DECA: (0, 1, 2),
}

_MODE_DATA_BITS = {
    CLMode.BASE: 24,
    CLMode.MEDIUM: 48,
    CLMode.FULL: 64,
    CLMode.DECA: 80,
}


@dataclass(frozen=True)
class CLConfig:
    mode: CLMode
    taps_per_clock: int
    bits_per_pixel: int
    pixel_clock_hz: int = MAX_PIXEL_CLOCK_HZ

    def __post_init__(self):
        mode = self.mode if isinstance(self.mode, CLMode) else CLMode(str(self.mode).upper())
        object.__setattr__(self, "mode", mode)
        if (self.taps_per_clock, self.bits_per_pixel) not in SUPPORTED_GEOMETRIES[mode]:
            raise ConfigError(
                f"{mode.value} does not support {self.taps_per_clock} taps x "
                f"{self.bits_per_pixel}-bit pixels"
            )
        if not 0 < self.pixel_clock_hz <= MAX_PIXEL_CLOCK_HZ:
            raise ConfigError(f"pixel clock {self.pixel_clock_hz} Hz outside (0, 85 MHz]")

    @property
    def channels(self) -> tuple[int, ...]:
        return _MODE_CHANNELS[self.mode]

    @property
    def data_bits(self) -> int:
        return _MODE_DATA_BITS[self.mode]

    @property
    def container_bytes(self) -> int:
        return 1 if self.bits_per_pixel == 8 else 2

    @property
    def container_dtype(self) -> np.dtype:
        return np.dtype(np.uint8 if self.container_bytes == 1 else np.uint16)

    @property
    def bytes_per_clock(self) -> int:
        return self.taps_per_clock * self.container_bytes


def all_supported_configs(pixel_clock_hz: int = MAX_PIXEL_CLOCK_HZ) -> list[CLConfig]:
    return [
        CLConfig(mode, taps, depth, pixel_clock_hz)
        for mode, pairs in SUPPORTED_GEOMETRIES.items()
        for taps, depth in sorted(pairs)
    ]


@dataclass(frozen=True)
class ClockSample:
    """Pixels delivered in one pixel clock plus the sync state."""

    pixels: tuple[int, ...]
    lval: bool = False
    fval: bool = False
    dval: bool = False


@dataclass
class VideoStream:
    """A run of pixel clocks as parallel arrays (pixels shaped (n, taps))."""

    pixels: np.ndarray
    lval: np.ndarray
    fval: np.ndarray
    dval: np.ndarray

    def __len__(self) -> int:
        return len(self.lval)

    def __getitem__(self, sl: slice) -> "VideoStream":
        return VideoStream(self.pixels[sl], self.lval[sl], self.fval[sl], self.dval[sl])

    def sample(self, i: int) -> ClockSample:
        return ClockSample(
            pixels=tuple(int(v) for v in self.pixels[i]),
            lval=bool(self.lval[i]),
            fval=bool(self.fval[i]),
            dval=bool(self.dval[i]),
        )

    @classmethod
    def from_samples(cls, samples: Iterable[ClockSample], config: CLConfig) -> "VideoStream":
        samples = list(samples)
        pixels = np.array([s.pixels for s in samples], dtype=config.container_dtype)
        pixels = pixels.reshape(len(samples), config.taps_per_clock)
        return cls(
            pixels=pixels,
            lval=np.array([s.lval for s in samples], dtype=bool),
            fval=np.array([s.fval for s in samples], dtype=bool),
            dval=np.array([s.dval for s in samples], dtype=bool),
        )

    @classmethod
    def concatenate(cls, streams: Sequence["VideoStream"]) -> "VideoStream":
        return cls(
            pixels=np.concatenate([s.pixels for s in streams]),
            lval=np.concatenate([s.lval for s in streams]),
            fval=np.concatenate([s.fval for s in streams]),
            dval=np.concatenate([s.dval for s in streams]),
        )


def _data_positions(config: CLConfig) -> list[int]:
    if config.mode is CLMode.DECA:
        return list(range(24)) + list(range(28, 84))
    return [28 * c + b for c in config.channels for b in range(24)]


def sync_channels(config: CLConfig) -> tuple[int, ...]:
    """Channels carrying the sync nibble at word bits 24..27."""
    return (0,) if config.mode is CLMode.DECA else config.channels


@lru_cache(maxsize=None)
def _segments(mode: CLMode, taps: int, depth: int) -> tuple[tuple[int, int, int, int, int], ...]:
    """Contiguous bit runs of the pixel fill: (tap, pixel_bit, channel, word_bit, nbits).

    Runs are split at channel-word boundaries so each maps into one 28-bit word.
    """
    config = CLConfig(mode, taps, depth)
    positions = _data_positions(config)
    segs = []
    for k in range(taps):
        bits = positions[k * depth:(k + 1) * depth]
        start = 0
        for i in range(1, depth + 1):
            if i == depth or bits[i] != bits[i - 1] + 1 or bits[i] % 28 == 0:
                g0 = bits[start]
                segs.append((k, start, g0 // 28, g0 % 28, i - start))
                start = i
    return tuple(segs)


@lru_cache(maxsize=None)
def _segment_arrays(mode: CLMode, taps: int, depth: int):
    """The segment table as parallel arrays for the mapping kernels."""
    segs = _segments(mode, taps, depth)
    return (
        np.array([s[0] for s in segs], dtype=np.int64),
        np.array([s[1] for s in segs], dtype=np.uint32),
        np.array([s[2] for s in segs], dtype=np.int64),
        np.array([s[3] for s in segs], dtype=np.uint32),
        np.array([(1 << s[4]) - 1 for s in segs], dtype=np.uint32),
    )


def pixels_to_group(sample: ClockSample, config: CLConfig) -> int:
    """Pack one clock of pixels plus sync into an 84-bit group."""
    if len(sample.pixels) != config.taps_per_clock:
        raise ValueError(
            f"expected {config.taps_per_clock} pixels per clock, got {len(sample.pixels)}"
        )
    limit = 1 << config.bits_per_pixel
    group = 0
    for tap, poff, ch, woff, nbits in _segments(config.mode, config.taps_per_clock, config.bits_per_pixel):
        value = sample.pixels[tap]
        if not 0 <= value < limit:
            raise DepthOverflowError(f"pixel {value} exceeds {config.bits_per_pixel}-bit depth")
        group |= ((value >> poff) & ((1 << nbits) - 1)) << (28 * ch + woff)
    sync = (
        (1 << LVAL_BIT if sample.lval else 0)
        | (1 << FVAL_BIT if sample.fval else 0)
        | (1 << DVAL_BIT if sample.dval else 0)
    )
    for ch in sync_channels(config):
        group |= sync << (28 * ch)
    return group


def group_to_pixels(group: int, config: CLConfig) -> ClockSample:
    """Exact inverse of :func:`pixels_to_group`; ignores bits outside the layout."""
    pixels = [0] * config.taps_per_clock
    for tap, poff, ch, woff, nbits in _segments(config.mode, config.taps_per_clock, config.bits_per_pixel):
        pixels[tap] |= ((group >> (28 * ch + woff)) & ((1 << nbits) - 1)) << poff
    return ClockSample(
        pixels=tuple(pixels),
        lval=bool(group >> LVAL_BIT & 1),
        fval=bool(group >> FVAL_BIT & 1),
        dval=bool(group >> DVAL_BIT & 1),
    )


def raw_throughput(config: CLConfig) -> int:
    """Payload bits per second (sync excluded); exact integer arithmetic."""
    return config.taps_per_clock * config.bits_per_pixel * config.pixel_clock_hz


def stream_to_words(stream: VideoStream, config: CLConfig) -> list[np.ndarray | None]:
    """Map a video stream to per-channel 28-bit word arrays [X, Y, Z].

    Channels absent from the configuration come back as None.
    """
    n = len(stream)
    px = np.ascontiguousarray(stream.pixels)
    out = np.zeros((len(config.channels), n), dtype=np.uint32)
    if config.mode is CLMode.DECA and config.bits_per_pixel == 8:
        _kernels.map_deca8_to_words(px, stream.lval, stream.fval, stream.dval, out)
    else:
        tap, poff, ch, woff, mask = _segment_arrays(
            config.mode, config.taps_per_clock, config.bits_per_pixel
        )
        _kernels.map_stream_to_words(
            px, stream.lval, stream.fval, stream.dval,
            tap, poff, ch, woff, mask, len(sync_channels(config)), out,
        )
    words: list[np.ndarray | None] = [None, None, None]
    for c in config.channels:
        words[c] = out[c]
    return words


def words_to_stream(words: Sequence[np.ndarray | None] | np.ndarray,
                    config: CLConfig) -> VideoStream:
    """Inverse of :func:`stream_to_words`; sync is read from channel X.

    `words` is either the [X, Y, Z] list (None for absent channels) or an
    already-stacked (channels, n) uint32 array.
    """
    if isinstance(words, np.ndarray) and words.ndim == 2:
        stacked = np.ascontiguousarray(words)
    else:
        if words[0] is None:
            raise ValueError("channel X is always present")
        for c in config.channels:
            if words[c] is None:
                raise ValueError(f"configuration uses channel {c} but it is missing")
        stacked = np.vstack([words[c] for c in config.channels])
    x = stacked[0]
    n = len(x)
    px = np.zeros((n, config.taps_per_clock), dtype=config.container_dtype)
    if config.mode is CLMode.DECA and config.bits_per_pixel == 8:
        _kernels.map_words_to_deca8(stacked, px)
    else:
        tap, poff, ch, woff, mask = _segment_arrays(
            config.mode, config.taps_per_clock, config.bits_per_pixel
        )
        _kernels.map_words_to_pixels(stacked, tap, poff, ch, woff, mask, px)
    return VideoStream(
        pixels=px,
        lval=(x >> np.uint32(LVAL_BIT) & 1).astype(bool),
        fval=(x >> np.uint32(FVAL_BIT) & 1).astype(bool),
        dval=(x >> np.uint32(DVAL_BIT) & 1).astype(bool),
    )
