"""Pydantic request/response models for the frame-grabber service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CameraParams(BaseModel):
    width: int
    height: int
    depth: int
    taps: int
    mode: str
    clock_hz: int
    pattern: str
    line_gap: int
    frame_gap: int
    running: bool


class CommandRequest(BaseModel):
    line: str = Field(description="Protocol line, CR optional; e.g. 'GET WIDTH'")


class CommandResponse(BaseModel):
    response: str


class GrabRequest(BaseModel):
    output_dir: str
    frames: int = 3
    width: int | None = None
    height: int | None = None
    depth: int | None = None
    taps: int | None = None
    mode: str | None = None
    clock_hz: int | None = None
    pattern: str | None = None
    line_gap: int | None = None
    frame_gap: int | None = None
    vfifo_capacity: int | None = None
    vfifo_page: int | None = None
    max_frame_bytes: int | None = None
    sg_buffer_sizes: list[int] | None = None
    sg_chunk: int | None = None
    phases: tuple[int, int, int] | None = None
    user_meta: int = 0


class GrabStats(BaseModel):
    frames_captured: int
    frames_dropped: int
    bytes_written: int
    high_watermark_bytes: int


class GrabResponse(BaseModel):
    stats: GrabStats
    files: list[str]
    ok: bool
    error: str | None = None


class BenchRequest(BaseModel):
    duration_s: float = 3.0
    width: int | None = None
    height: int | None = None
    depth: int | None = None
    taps: int | None = None
    mode: str | None = None
    clock_hz: int | None = None
    pattern: str | None = None
    line_gap: int | None = None
    frame_gap: int | None = None
    phases: tuple[int, int, int] | None = None
    bus_bits: int = 64
    mem_clock_hz: int = 533_000_000
    ddr: bool = True
    cameras: int = 2


class BenchResponse(BaseModel):
    raw_throughput_bps: int
    raw_throughput_gbps: str
    memory_bandwidth_bps: int
    memory_bandwidth_gbps: str
    headroom_num: int
    headroom_den: int
    headroom: float
    cameras: int
    measured_bytes_per_s: float
    cpu_bytes_per_s: float
    line_rate_bytes_per_s: int
    bytes_processed: int
    frames_processed: int
    duration_s: float
    cpu_s: float


class SupportedConfig(BaseModel):
    mode: str
    taps: int
    depth: int


class InfoResponse(BaseModel):
    name: str
    version: str
    camera_id: str
    max_pixel_clock_hz: int
    supported_configs: list[SupportedConfig]
