"""End-to-end wiring: camera -> link codec -> tap mapper -> acquisition ->
TIFF sink -> scatter-gather DMA -> files, plus the throughput benchmark.

All randomness is seeded from the run configuration; a run is reproducible
bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import link
from .acquisition import AcquisitionWriter, FrameInfo, AcqStats, VFifo, frame_read
from .camera import CameraState, Pattern, ReferenceCamera, parse_pattern
from .dma import CompletionStatus, DmaEngine, build_sg_list
from .taps import CLConfig, CLMode, ConfigError, VideoStream, raw_throughput, \
    stream_to_words, words_to_stream
from .tiff import TIFF_HEADER_SIZE, frame_filename, write_frame_tiff

#: Soft cap on per-batch pixel payload so long runs stream in chunks.
BATCH_PAYLOAD_BYTES = 8 * 1024 * 1024


@dataclass
class RunConfig:
    mode: str = "BASE"
    taps: int = 1
    depth: int = 8
    clock_hz: int = 85_000_000
    width: int = 64
    height: int = 48
    pattern: str = "GRADIENT"
    line_gap: int = 4
    frame_gap: int = 8
    frames: int = 3
    output_dir: str | None = None
    vfifo_capacity: int = 64 * 1024 * 1024
    vfifo_page: int = 4096
    max_frame_bytes: int | None = None
    sg_buffer_sizes: tuple[int, ...] | None = None
    sg_chunk: int = 65536
    phases: tuple[int, int, int] = (0, 0, 0)
    user_meta: int = 0
    report: str = "text"
    bench_duration_s: float = 3.0
    bus_bits: int = 64
    mem_clock_hz: int = 533_000_000
    ddr: bool = True
    cameras: int = 2

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "RunConfig":
        """Build from flat key=value data (config file and/or CLI flags)."""
        kwargs = {}
        by_name = {f.name: f for f in fields(cls)}
        for key, raw in mapping.items():
            if raw is None:
                continue
            name = key.strip().lower().replace("-", "_")
            if name not in by_name:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = _coerce(name, raw)
        return cls(**kwargs)


_INT_TUPLE_KEYS = {"sg_buffer_sizes", "phases"}
_INT_KEYS = {
    "taps", "depth", "clock_hz", "width", "height", "line_gap", "frame_gap",
    "frames", "vfifo_capacity", "vfifo_page", "max_frame_bytes", "sg_chunk",
    "user_meta", "bus_bits", "mem_clock_hz", "cameras",
}


def _coerce(name: str, raw: object):
    if name in _INT_TUPLE_KEYS:
        if isinstance(raw, str):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return tuple(int(v) for v in raw)  # type: ignore[arg-type]
    if name in _INT_KEYS:
        return int(raw)  # type: ignore[arg-type]
    if name == "bench_duration_s":
        return float(raw)  # type: ignore[arg-type]
    if name == "ddr":
        if isinstance(raw, str):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return bool(raw)
    return str(raw)


def build_camera_state(cfg: RunConfig) -> CameraState:
    state = CameraState(
        width=cfg.width,
        height=cfg.height,
        bits_per_pixel=cfg.depth,
        taps=cfg.taps,
        mode=CLMode(cfg.mode.upper()),
        pixel_clock_hz=cfg.clock_hz,
        line_gap_clocks=cfg.line_gap,
        frame_gap_clocks=cfg.frame_gap,
    )
    parse_pattern(state, cfg.pattern)
    state.validate()
    return state


def link_roundtrip(stream: VideoStream, config: CLConfig,
                   phases: Sequence[int] = (0, 0, 0)) -> VideoStream:
    """Serialize each channel with its skew phase, realign, deserialize, remap."""
    tx_words = stream_to_words(stream, config)
    rx_words = np.empty((len(config.channels), len(stream)), dtype=np.uint32)
    for ch in config.channels:
        packed = link.serialize_stream(tx_words[ch], phases[ch])
        link.deserialize_stream(packed, out=rx_words[ch])
    return words_to_stream(rx_words, config)


@dataclass
class GrabResult:
    stats: AcqStats
    files: list[str]
    infos: list[FrameInfo]
    completions: list
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.stats.frames_dropped == 0

    def to_keyvalue(self) -> str:
        lines = [
            f"frames_captured={self.stats.frames_captured}",
            f"frames_dropped={self.stats.frames_dropped}",
            f"bytes_written={self.stats.bytes_written}",
            f"high_watermark_bytes={self.stats.high_watermark_bytes}",
            f"files={len(self.files)}",
        ]
        if self.error:
            lines.append(f"error={self.error}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        text = (
            f"captured {self.stats.frames_captured} frame(s), "
            f"dropped {self.stats.frames_dropped}, "
            f"{self.stats.bytes_written} bytes "
            f"(high watermark {self.stats.high_watermark_bytes} bytes), "
            f"{len(self.files)} file(s) written\n"
        )
        if self.error:
            text += f"error: {self.error}\n"
        return text


def _default_sg_sizes(total_bytes: int, buffers: int = 4) -> tuple[int, ...]:
    per_buffer = max(1, math.ceil(total_bytes / buffers))
    return tuple(per_buffer for _ in range(buffers))


def run_grab(cfg: RunConfig) -> GrabResult:
    state = build_camera_state(cfg)
    config = state.config()
    camera = ReferenceCamera(state)

    frame_bytes = cfg.width * cfg.height * config.container_bytes
    try:
        vfifo = VFifo(cfg.vfifo_capacity, cfg.vfifo_page)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    writer = AcquisitionWriter(
        vfifo, config,
        max_frame_bytes=cfg.max_frame_bytes or frame_bytes,
        user_meta=cfg.user_meta,
    )
    total_tiff = cfg.frames * (TIFF_HEADER_SIZE + frame_bytes)
    sg_sizes = cfg.sg_buffer_sizes or _default_sg_sizes(max(total_tiff, 1))
    engine = DmaEngine(sg_sizes, build_sg_list(sg_sizes, cfg.sg_chunk))

    infos: list[FrameInfo] = []
    tiff_sizes: list[int] = []
    error = None
    remaining = cfg.frames
    batch = max(1, BATCH_PAYLOAD_BYTES // max(frame_bytes, 1))
    while remaining and error is None:
        count = min(batch, remaining)
        remaining -= count
        stream = camera.emit(count)
        received = link_roundtrip(stream, config, cfg.phases)
        writer.process(received)
        while writer.info_fifo:
            info, frame, _ = frame_read(vfifo, writer.info_fifo, config.taps_per_clock,
                                        with_stream=False)
            payload = write_frame_tiff(info, frame)
            completion = engine.transfer_frame(payload)
            infos.append(info)
            tiff_sizes.append(len(payload))
            if completion.status is CompletionStatus.LIST_EXHAUSTED:
                error = "scatter-gather list exhausted"
                break

    files: list[str] = []
    if cfg.output_dir is not None and infos and error is None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        blob = engine.reassemble()
        offset = 0
        for info, size in zip(infos, tiff_sizes):
            path = out / frame_filename(info.frame_number)
            path.write_bytes(blob[offset:offset + size])
            offset += size
            files.append(str(path))
    return GrabResult(writer.stats, files, infos, engine.completions, error)


@dataclass
class BenchReport:
    config: CLConfig
    raw_throughput_bps: int
    memory_bandwidth_bps: int
    headroom: Fraction
    cameras: int
    measured_bytes_per_s: float
    cpu_bytes_per_s: float
    line_rate_bytes_per_s: int
    bytes_processed: int
    frames_processed: int
    duration_s: float
    cpu_s: float

    def to_keyvalue(self) -> str:
        return "\n".join([
            f"raw_throughput_bps={self.raw_throughput_bps}",
            f"raw_throughput_gbps={_sig3(self.raw_throughput_bps / 1e9)}",
            f"memory_bandwidth_bps={self.memory_bandwidth_bps}",
            f"memory_bandwidth_gbps={_sig3(self.memory_bandwidth_bps / 1e9)}",
            f"headroom_num={self.headroom.numerator}",
            f"headroom_den={self.headroom.denominator}",
            f"headroom={float(self.headroom):.4f}",
            f"cameras={self.cameras}",
            f"measured_bytes_per_s={self.measured_bytes_per_s:.0f}",
            f"cpu_bytes_per_s={self.cpu_bytes_per_s:.0f}",
            f"line_rate_bytes_per_s={self.line_rate_bytes_per_s}",
            f"bytes_processed={self.bytes_processed}",
            f"frames_processed={self.frames_processed}",
            f"duration_s={self.duration_s:.3f}",
            f"cpu_s={self.cpu_s:.3f}",
        ]) + "\n"

    def to_text(self) -> str:
        return (
            f"raw link throughput: {_sig3(self.raw_throughput_bps / 1e9)} Gb/s "
            f"({self.raw_throughput_bps} b/s)\n"
            f"memory bandwidth:    {_sig3(self.memory_bandwidth_bps / 1e9)} Gb/s "
            f"({self.memory_bandwidth_bps} b/s)\n"
            f"headroom over {self.cameras} camera(s) x2: "
            f"{self.headroom.numerator}/{self.headroom.denominator} "
            f"= {float(self.headroom):.3f}\n"
            f"measured pipeline:   {self.measured_bytes_per_s / 1e6:.1f} MB/s "
            f"({self.frames_processed} frames, {self.bytes_processed} bytes "
            f"in {self.duration_s:.2f} s)\n"
            f"per CPU second:      {self.cpu_bytes_per_s / 1e6:.1f} MB/s "
            f"({self.cpu_s:.2f} s of CPU time)\n"
            f"hardware line rate:  {self.line_rate_bytes_per_s / 1e6:.0f} MB/s equivalent\n"
        )


def _sig3(value: float) -> str:
    return f"{value:.3g}"


def run_bench(cfg: RunConfig) -> BenchReport:
    state = build_camera_state(cfg)
    config = state.config()
    theoretical = raw_throughput(config)
    bandwidth = cfg.bus_bits * cfg.mem_clock_hz * (2 if cfg.ddr else 1)
    headroom = Fraction(bandwidth, cfg.cameras * 2 * theoretical)

    frame_bytes = cfg.width * cfg.height * config.container_bytes
    batch = max(1, min(BATCH_PAYLOAD_BYTES // max(frame_bytes, 1), 64))
    camera = ReferenceCamera(state)
    template = camera.emit(batch)  # camera content repeats; downstream work does not

    vfifo = VFifo(cfg.vfifo_capacity, cfg.vfifo_page)
    writer = AcquisitionWriter(vfifo, config, max_frame_bytes=frame_bytes)
    sg_sizes = _default_sg_sizes(batch * (TIFF_HEADER_SIZE + frame_bytes))
    engine = DmaEngine(sg_sizes, build_sg_list(sg_sizes, cfg.sg_chunk))

    def one_pass():
        processed = 0
        frames = 0
        received = link_roundtrip(template, config, cfg.phases)
        writer.process(received)
        engine.reset()
        while writer.info_fifo:
            info, frame, _ = frame_read(vfifo, writer.info_fifo,
                                        config.taps_per_clock, with_stream=False)
            engine.transfer_frame(write_frame_tiff(info, frame))
            processed += info.byte_count
            frames += 1
        return processed, frames

    one_pass()  # warm code paths and allocator before the timed window

    bytes_processed = 0
    frames_processed = 0
    start = time.perf_counter()
    cpu_start = time.process_time()
    while True:
        processed, frames = one_pass()
        bytes_processed += processed
        frames_processed += frames
        elapsed = time.perf_counter() - start
        if elapsed >= cfg.bench_duration_s:
            break
    cpu_elapsed = time.process_time() - cpu_start
    return BenchReport(
        config=config,
        raw_throughput_bps=theoretical,
        memory_bandwidth_bps=bandwidth,
        headroom=headroom,
        cameras=cfg.cameras,
        measured_bytes_per_s=bytes_processed / elapsed,
        cpu_bytes_per_s=bytes_processed / cpu_elapsed,
        line_rate_bytes_per_s=theoretical // 8,
        bytes_processed=bytes_processed,
        frames_processed=frames_processed,
        duration_s=elapsed,
        cpu_s=cpu_elapsed,
    )
