"""Scatter-gather DMA emulation: per-frame byte streams written across a
descriptor list of non-contiguous host buffers, with completion records.

Frames are consumed strictly in list order and may share descriptors (a frame
starts at the next unused byte of the current descriptor). If the list runs
out mid-frame the engine records one ListExhausted completion with the partial
byte count and halts; it does not wrap or recycle descriptors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class CompletionStatus(enum.Enum):
    OK = "OK"
    LIST_EXHAUSTED = "ListExhausted"


class EngineHaltedError(Exception):
    """Transfer attempted after descriptor-list exhaustion."""


@dataclass(frozen=True)
class SgDescriptor:
    buffer_id: int
    offset: int
    length: int
    last: bool = False

    def __post_init__(self):
        if self.length < 1 or self.offset < 0:
            raise ValueError(f"bad descriptor span ({self.offset}, {self.length})")


@dataclass(frozen=True)
class Completion:
    frame_number: int
    bytes_written: int
    first_descriptor: int
    descriptor_count: int
    status: CompletionStatus


def build_sg_list(buffer_sizes: Sequence[int], chunk: int) -> list[SgDescriptor]:
    """Tile each buffer in order with `chunk`-byte segments (tail may be short)."""
    if chunk < 1:
        raise ValueError("chunk must be at least 1 byte")
    descriptors = []
    for buf_id, size in enumerate(buffer_sizes):
        for offset in range(0, size, chunk):
            descriptors.append(
                SgDescriptor(buf_id, offset, min(chunk, size - offset))
            )
    if descriptors:
        tail = descriptors[-1]
        descriptors[-1] = SgDescriptor(tail.buffer_id, tail.offset, tail.length, last=True)
    return descriptors


class DmaEngine:
    """One engine instance per stream; transfers are serialized per instance."""

    def __init__(self, buffer_sizes: Sequence[int], descriptors: Sequence[SgDescriptor]):
        self.buffers = [np.zeros(size, dtype=np.uint8) for size in buffer_sizes]
        for d in descriptors:
            if d.buffer_id >= len(self.buffers) or d.offset + d.length > len(self.buffers[d.buffer_id]):
                raise ValueError(f"descriptor {d} outside its buffer")
        self.descriptors = list(descriptors)
        self.completions: list[Completion] = []
        self.reset()

    def reset(self) -> None:
        """Rewind to the start of the list (emulation plumbing, not a DMA op)."""
        self._desc_index = 0
        self._desc_used = 0
        self._frame_number = 0
        self.halted = False
        self.completions = []

    @property
    def bytes_transferred(self) -> int:
        return sum(c.bytes_written for c in self.completions)

    def transfer_frame(self, data: bytes | np.ndarray) -> Completion:
        if self.halted:
            raise EngineHaltedError("descriptor list exhausted")
        view = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else data
        first = self._desc_index
        written = 0
        last_counted = -1
        touched = 0
        remaining = len(view)
        status = CompletionStatus.OK
        while remaining:
            if self._desc_index >= len(self.descriptors):
                self.halted = True
                status = CompletionStatus.LIST_EXHAUSTED
                break
            desc = self.descriptors[self._desc_index]
            room = desc.length - self._desc_used
            take = min(room, remaining)
            buf = self.buffers[desc.buffer_id]
            start = desc.offset + self._desc_used
            buf[start:start + take] = view[written:written + take]
            written += take
            remaining -= take
            if self._desc_index != last_counted:
                touched += 1
                last_counted = self._desc_index
            self._desc_used += take
            if self._desc_used == desc.length:
                self._desc_index += 1
                self._desc_used = 0
        completion = Completion(self._frame_number, written, first, touched, status)
        self.completions.append(completion)
        self._frame_number += 1
        return completion

    def reassemble(self) -> bytes:
        """Walk descriptors in order over the written byte count; this must
        reproduce the concatenated input streams exactly."""
        total = self.bytes_transferred
        parts = []
        for desc in self.descriptors:
            if total <= 0:
                break
            take = min(desc.length, total)
            buf = self.buffers[desc.buffer_id]
            parts.append(buf[desc.offset:desc.offset + take])
            total -= take
        return b"" if not parts else np.concatenate(parts).tobytes()


def dma_transfer(frames: Iterable[bytes], buffer_sizes: Sequence[int],
                 descriptors: Sequence[SgDescriptor]) -> tuple[list[np.ndarray], list[Completion]]:
    """Convenience wrapper: transfer frames until done or the list is exhausted."""
    engine = DmaEngine(buffer_sizes, descriptors)
    for frame in frames:
        completion = engine.transfer_frame(frame)
        if completion.status is CompletionStatus.LIST_EXHAUSTED:
            break
    return engine.buffers, engine.completions
