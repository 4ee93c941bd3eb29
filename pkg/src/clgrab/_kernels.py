"""LUT-accelerated kernels for the 7:1 link codec hot path.

The serializer maps each 28-bit word to four 7-bit lane bytes (one byte per
data lane, bit-time t at bit position t), packed into one uint32. Two 14-bit
lookup tables cover the word; two 16-bit tables invert the mapping. Inter-lane
skew is a cyclic bit rotation of the serialized stream, applied per byte with
a one-word carry.
"""

from __future__ import annotations

import numpy as np
from numba import njit

#: Clock-lane byte: the repeating pattern 1,1,0,0,0,1,1 with bit-time 0 at LSB.
CLOCK_BYTE = 0x63


def rotated_clock_byte(phase: int) -> int:
    """Clock-lane byte after rotating the serialized stream left by `phase`."""
    return ((CLOCK_BYTE >> phase) | (CLOCK_BYTE << (7 - phase))) & 0x7F


def _build_serialize_luts():
    idx = np.arange(1 << 14, dtype=np.uint32)
    lo = np.zeros(1 << 14, np.uint32)
    hi = np.zeros(1 << 14, np.uint32)
    for m in range(14):
        bit = (idx >> m) & 1
        t, j = divmod(m, 4)
        lo |= bit << np.uint32(8 * j + t)
        t, j = divmod(m + 14, 4)
        hi |= bit << np.uint32(8 * j + t)
    return lo, hi


def _build_deserialize_luts():
    idx = np.arange(1 << 16, dtype=np.uint32)
    lo = np.zeros(1 << 16, np.uint32)
    hi = np.zeros(1 << 16, np.uint32)
    for j in range(2):
        for t in range(7):
            bit = (idx >> (8 * j + t)) & 1
            lo |= bit << np.uint32(4 * t + j)
            hi |= bit << np.uint32(4 * t + j + 2)
    return lo, hi


SER_LO, SER_HI = _build_serialize_luts()
DES_LO, DES_HI = _build_deserialize_luts()


@njit(cache=True)
def serialize_words(words, phase, slo, shi, out):
    """words[uint32] -> packed rotated lane bytes[uint32], cyclic over the call."""
    n = words.shape[0]
    m14 = np.uint32(0x3FFF)
    c14 = np.uint32(14)
    if phase == 0:
        for i in range(n):
            w = words[i]
            out[i] = slo[w & m14] | shi[w >> c14]
        return
    p = np.uint32(phase)
    q = np.uint32(7 - phase)
    m7 = np.uint32(0x7F7F7F7F)
    ones = np.uint32(0x01010101)
    m1 = ones * np.uint32(0x7F >> phase)
    m1c = m7 ^ m1
    w = words[0]
    first = slo[w & m14] | shi[w >> c14]
    cur = first
    for i in range(n):
        if i + 1 < n:
            w = words[i + 1]
            nxt = slo[w & m14] | shi[w >> c14]
        else:
            nxt = first
        out[i] = ((cur >> p) & m1) | ((nxt << q) & m1c)
        cur = nxt


@njit(cache=True)
def deserialize_packed(packed, phase, dlo, dhi, out):
    """Undo the rotation by `phase` and decode packed lane bytes back to words."""
    n = packed.shape[0]
    m16 = np.uint32(0xFFFF)
    c16 = np.uint32(16)
    if phase == 0:
        for i in range(n):
            pk = packed[i]
            out[i] = dlo[pk & m16] | dhi[pk >> c16]
        return
    p = np.uint32(phase)
    q = np.uint32(7 - phase)
    m7 = np.uint32(0x7F7F7F7F)
    ones = np.uint32(0x01010101)
    m2 = m7 & (ones * np.uint32((0x7F << phase) & 0x7F))
    m2c = ones * np.uint32(0x7F >> (7 - phase))
    prev = packed[n - 1]
    for i in range(n):
        cur = packed[i]
        de = ((cur << p) & m2) | ((prev >> q) & m2c)
        out[i] = dlo[de & m16] | dhi[de >> c16]
        prev = cur


@njit(cache=True)
def map_stream_to_words(px, lval, fval, dval, tap, poff, ch, woff, mask,
                        nsync, out):
    """Pack pixels (n, taps) plus sync flags into channel words out (nch, n).

    Segment s moves `mask[s]`-wide pixel bits of tap `tap[s]` starting at bit
    `poff[s]` into channel `ch[s]` at word bit `woff[s]`. The sync nibble goes
    to the first `nsync` channels.
    """
    n = px.shape[0]
    k = tap.shape[0]
    b24 = np.uint32(24)
    b25 = np.uint32(25)
    b26 = np.uint32(26)
    for i in range(n):
        out[0, i] = (
            (np.uint32(lval[i]) << b24)
            | (np.uint32(fval[i]) << b25)
            | (np.uint32(dval[i]) << b26)
        )
    for c in range(1, nsync):
        for i in range(n):
            out[c, i] = out[0, i]
    for s in range(k):
        t = tap[s]
        dst = out[ch[s]]
        po = poff[s]
        wo = woff[s]
        mk = mask[s]
        for i in range(n):
            dst[i] |= ((np.uint32(px[i, t]) >> po) & mk) << wo


@njit(cache=True)
def map_words_to_pixels(words, tap, poff, ch, woff, mask, px):
    """Inverse of map_stream_to_words for the pixel bits (sync read elsewhere)."""
    n = px.shape[0]
    k = tap.shape[0]
    for s in range(k):
        t = tap[s]
        src = words[ch[s]]
        po = poff[s]
        wo = woff[s]
        mk = mask[s]
        for i in range(n):
            px[i, t] |= ((src[i] >> wo) & mk) << po


@njit(cache=True)
def extract_payload(px, valid, out):
    """Compact the rows of px (n, taps) flagged by `valid` into flat `out`.

    Returns the number of pixels written.
    """
    n, taps = px.shape
    k = 0
    for i in range(n):
        if valid[i]:
            for t in range(taps):
                out[k] = px[i, t]
                k += 1
    return k


@njit(cache=True)
def map_deca8_to_words(px, lval, fval, dval, out):
    """80-bit-mode fast path: 10 x 8-bit pixels (n, 10) -> words out (3, n).

    Taps 0-2 fill X bits 0-23, taps 3-5 fill Y bits 0-23, tap 6 straddles
    Y bits 24-27 and Z bits 0-3, taps 7-9 fill Z bits 4-27. The sync nibble
    goes to X bits 24-26 only.
    """
    n = px.shape[0]
    b4 = np.uint32(4)
    b8 = np.uint32(8)
    b12 = np.uint32(12)
    b16 = np.uint32(16)
    b20 = np.uint32(20)
    b24 = np.uint32(24)
    b25 = np.uint32(25)
    b26 = np.uint32(26)
    mf = np.uint32(0xF)
    for i in range(n):
        p0 = np.uint32(px[i, 0])
        p1 = np.uint32(px[i, 1])
        p2 = np.uint32(px[i, 2])
        p3 = np.uint32(px[i, 3])
        p4 = np.uint32(px[i, 4])
        p5 = np.uint32(px[i, 5])
        p6 = np.uint32(px[i, 6])
        p7 = np.uint32(px[i, 7])
        p8 = np.uint32(px[i, 8])
        p9 = np.uint32(px[i, 9])
        sync = (
            (np.uint32(lval[i]) << b24)
            | (np.uint32(fval[i]) << b25)
            | (np.uint32(dval[i]) << b26)
        )
        out[0, i] = p0 | (p1 << b8) | (p2 << b16) | sync
        out[1, i] = p3 | (p4 << b8) | (p5 << b16) | ((p6 & mf) << b24)
        out[2, i] = (p6 >> b4) | (p7 << b4) | (p8 << b12) | (p9 << b20)


@njit(cache=True)
def map_words_to_deca8(words, px):
    """Inverse of map_deca8_to_words for the pixel bits."""
    n = px.shape[0]
    b4 = np.uint32(4)
    b8 = np.uint32(8)
    b12 = np.uint32(12)
    b16 = np.uint32(16)
    b20 = np.uint32(20)
    b24 = np.uint32(24)
    m8 = np.uint32(0xFF)
    mf = np.uint32(0xF)
    for i in range(n):
        x = words[0, i]
        y = words[1, i]
        z = words[2, i]
        px[i, 0] = np.uint8(x & m8)
        px[i, 1] = np.uint8((x >> b8) & m8)
        px[i, 2] = np.uint8((x >> b16) & m8)
        px[i, 3] = np.uint8(y & m8)
        px[i, 4] = np.uint8((y >> b8) & m8)
        px[i, 5] = np.uint8((y >> b16) & m8)
        px[i, 6] = np.uint8(((y >> b24) & mf) | ((z & mf) << b4))
        px[i, 7] = np.uint8((z >> b4) & m8)
        px[i, 8] = np.uint8((z >> b12) & m8)
        px[i, 9] = np.uint8((z >> b20) & m8)


@njit(cache=True)
def frame_scan(lval, dval, px, out):
    """One-pass frame scan: line structure plus compacted payload.

    Walks one FVAL span, counting LVAL-high runs (lines) and the DVAL-qualified
    clocks of each, while compacting the qualified pixels of px (n, taps) into
    flat `out`. Returns (clocks_per_line, height, pixels_written, ragged) where
    ragged flags unequal line lengths (clocks_per_line is then unreliable).
    """
    n = lval.shape[0]
    taps = px.shape[1]
    k = 0
    height = 0
    first_count = -1
    count = 0
    in_line = False
    ragged = False
    for i in range(n):
        if lval[i]:
            if not in_line:
                in_line = True
                height += 1
                count = 0
            if dval[i]:
                count += 1
                for t in range(taps):
                    out[k] = px[i, t]
                    k += 1
        elif in_line:
            in_line = False
            if first_count < 0:
                first_count = count
            elif count != first_count:
                ragged = True
    if in_line:
        if first_count < 0:
            first_count = count
        elif count != first_count:
            ragged = True
    return first_count, height, k, ragged
