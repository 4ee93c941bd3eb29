"""Bit-exact Channel Link 7:1 serializer/deserializer with phase alignment.

One 28-bit word travels per pixel clock on each channel: three 8-bit ports
(A low, then B, then C) and four flags (LVAL, FVAL, DVAL, spare) in bits
24..27. Serialization spreads word bit 4*t + j onto data lane j at bit-time
t (t = 0..6), while the clock lane repeats the pattern 1,1,0,0,0,1,1 every
word. Inter-channel skew is modeled as a cyclic rotation of the whole
five-lane output by 0..6 bit positions; the receiver recovers the phase from
the clock lane alone, since all seven rotations of the pattern are distinct.

Two representations are provided:

* :class:`LaneSet` - one uint8 array of 0/1 per lane, the canonical form used
  by :func:`serialize_channel` / :func:`deserialize_channel`.
* :class:`PackedChannel` - lane bytes packed one uint32 per word, used by the
  streaming fast path (:func:`serialize_stream` / :func:`deserialize_stream`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels

WORD_BITS = 28
WORD_MASK = (1 << WORD_BITS) - 1

#: Clock-lane pattern for one word, bit-time 0 first.
CLOCK_PATTERN = (1, 1, 0, 0, 0, 1, 1)

_CLOCK_BYTE_TO_PHASE = {_kernels.rotated_clock_byte(p): p for p in range(7)}


class NoAlignmentError(Exception):
    """No rotation of the clock lane matches the word-clock pattern."""


class TruncatedWordError(Exception):
    """Aligned lane length is not a whole number of 7-bit words."""


class LengthMismatchError(Exception):
    """Channel word sequences of unequal length cannot share a pixel clock."""


def pack_word(a: int, b: int, c: int, lval: int, fval: int, dval: int, spare: int = 0) -> int:
    """Pack ports A/B/C and the four flags into one 28-bit link word."""
    return (
        (a & 0xFF)
        | (b & 0xFF) << 8
        | (c & 0xFF) << 16
        | (1 << 24 if lval else 0)
        | (1 << 25 if fval else 0)
        | (1 << 26 if dval else 0)
        | (1 << 27 if spare else 0)
    )


def unpack_word(word: int) -> tuple[int, int, int, int, int, int, int]:
    """Inverse of :func:`pack_word`; total on 28-bit values."""
    return (
        word & 0xFF,
        (word >> 8) & 0xFF,
        (word >> 16) & 0xFF,
        (word >> 24) & 1,
        (word >> 25) & 1,
        (word >> 26) & 1,
        (word >> 27) & 1,
    )


@dataclass(frozen=True)
class LaneSet:
    """Four data lanes plus the clock lane, as equal-length 0/1 bit arrays."""

    data: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    clock: np.ndarray

    def __post_init__(self):
        n = len(self.clock)
        if any(len(lane) != n for lane in self.data):
            raise ValueError("all five lanes must have equal length")

    def __len__(self) -> int:
        return len(self.clock)


@dataclass(frozen=True)
class PackedChannel:
    """Streaming form of a serialized channel: one uint32 of lane bytes per word.

    ``data[i]`` holds the four 7-bit data-lane bytes of bit-times belonging to
    word slot ``i`` (lane j in bits 8j..8j+6); ``clock[i]`` holds the clock
    lane byte. The skew rotation is already applied, cyclically over the call.
    """

    data: np.ndarray
    clock: np.ndarray

    def __len__(self) -> int:
        return len(self.data)


def _as_word_array(words: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(words, dtype=np.uint32)
    if arr.ndim != 1:
        raise ValueError("words must be a 1-D sequence")
    return arr


def serialize_channel(words: Sequence[int] | np.ndarray, phase: int = 0) -> LaneSet:
    """Serialize words onto 4 data lanes + clock lane, rotated left by `phase`."""
    if not 0 <= phase <= 6:
        raise ValueError(f"phase must be in 0..6, got {phase}")
    arr = _as_word_array(words)
    n = len(arr)
    bits = ((arr[:, None] >> np.arange(WORD_BITS, dtype=np.uint32)) & 1).astype(np.uint8)
    data = tuple(np.roll(np.ascontiguousarray(bits[:, j::4]).ravel(), -phase) for j in range(4))
    clock = np.roll(np.tile(np.array(CLOCK_PATTERN, dtype=np.uint8), n), -phase)
    return LaneSet(data=data, clock=clock)


def align_channel(lanes: LaneSet) -> int:
    """Recover the skew phase from the clock lane alone.

    Returns the unique rotation k such that rotating all lanes right by k
    makes the clock lane a pure repetition of the word-clock pattern.
    """
    clk = lanes.clock
    n = len(clk)
    if n < 14:
        raise ValueError("need at least two word periods (14 bits) to align")
    reference = np.tile(np.array(CLOCK_PATTERN, dtype=np.uint8), -(-n // 7))[:n]
    for k in range(7):
        if np.array_equal(np.roll(clk, k), reference):
            return k
    raise NoAlignmentError("clock lane matches no rotation of the word-clock pattern")


def deserialize_channel(lanes: LaneSet) -> np.ndarray:
    """Align, then invert the lane/bit-time mapping word by word."""
    phase = align_channel(lanes)
    n = len(lanes)
    if n % 7:
        raise TruncatedWordError(f"{n} aligned bits is not a whole number of words")
    words = np.zeros(n // 7, dtype=np.uint32)
    for j, lane in enumerate(lanes.data):
        aligned = np.roll(lane, phase).reshape(-1, 7)
        for t in range(7):
            words |= aligned[:, t].astype(np.uint32) << np.uint32(4 * t + j)
    return words


def serialize_stream(words: np.ndarray, phase: int = 0) -> PackedChannel:
    """Packed-form equivalent of :func:`serialize_channel` for large streams."""
    if not 0 <= phase <= 6:
        raise ValueError(f"phase must be in 0..6, got {phase}")
    arr = _as_word_array(words)
    out = np.empty(len(arr), dtype=np.uint32)
    _kernels.serialize_words(arr, phase, _kernels.SER_LO, _kernels.SER_HI, out)
    clock = np.full(len(arr), _kernels.rotated_clock_byte(phase), dtype=np.uint8)
    return PackedChannel(data=out, clock=clock)


def align_stream(packed: PackedChannel) -> int:
    """Clock-lane-only phase recovery on the packed representation."""
    clk = packed.clock
    if len(clk) < 2:
        raise ValueError("need at least two word periods to align")
    first = int(clk[0])
    if first not in _CLOCK_BYTE_TO_PHASE or not np.all(clk == clk[0]):
        raise NoAlignmentError("clock lane matches no rotation of the word-clock pattern")
    return _CLOCK_BYTE_TO_PHASE[first]


def deserialize_stream(packed: PackedChannel, out: np.ndarray | None = None) -> np.ndarray:
    """Packed-form equivalent of :func:`deserialize_channel`.

    `out`, if given, must be a contiguous uint32 array of matching length.
    """
    phase = align_stream(packed)
    if out is None:
        out = np.empty(len(packed), dtype=np.uint32)
    _kernels.deserialize_packed(packed.data, phase, _kernels.DES_LO, _kernels.DES_HI, out)
    return out


def packed_to_lanes(packed: PackedChannel) -> LaneSet:
    """Expand the packed form to explicit bit arrays (test/debug aid)."""
    shifts = np.arange(7, dtype=np.uint32)
    data = tuple(
        np.ascontiguousarray(((packed.data[:, None] >> (8 * j + shifts)) & 1).astype(np.uint8)).ravel()
        for j in range(4)
    )
    clock = np.ascontiguousarray(((packed.clock[:, None] >> shifts) & 1).astype(np.uint8)).ravel()
    return LaneSet(data=data, clock=clock)


def merge_channels(
    x: Sequence[int] | np.ndarray,
    y: Sequence[int] | np.ndarray | None = None,
    z: Sequence[int] | np.ndarray | None = None,
) -> list[int]:
    """Concatenate per-channel 28-bit words into 84-bit groups, one per clock.

    Absent channels (Base/Medium configurations) contribute zero.
    """
    xs = _as_word_array(x)
    present = [(0, xs)]
    if y is not None:
        present.append((28, _as_word_array(y)))
    if z is not None:
        present.append((56, _as_word_array(z)))
    lengths = {len(arr) for _, arr in present}
    if len(lengths) > 1:
        raise LengthMismatchError(f"channel lengths differ: {sorted(lengths)}")
    groups = [0] * len(xs)
    for shift, arr in present:
        for i, w in enumerate(arr):
            groups[i] |= int(w) << shift
    return groups


def split_group(group: int) -> tuple[int, int, int]:
    """Split one 84-bit group back into X, Y, Z channel words."""
    return group & WORD_MASK, (group >> 28) & WORD_MASK, (group >> 56) & WORD_MASK


def dump_words(words: Sequence[int] | np.ndarray) -> str:
    """Debug dump: one 28-bit word per line, 7 hex digits."""
    return "".join(f"{int(w) & WORD_MASK:07X}\n" for w in words)


def load_words(text: str) -> list[int]:
    """Parse the :func:`dump_words` format."""
    return [int(line, 16) for line in text.split() if line]
