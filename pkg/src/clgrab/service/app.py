"""FastAPI service wrapping the frame-grabber pipeline.

One camera session per service instance: the simulated camera plus its serial
transport. Control commands, grabs, and benchmarks all operate on that
session, serialized by a lock (one outstanding command per transport, one
pipeline run at a time).
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..camera import CAMERA_ID, ReferenceCamera, format_pattern
from ..control import LoopbackTransport, send_command
from ..pipeline import RunConfig, run_bench, run_grab
from ..taps import MAX_PIXEL_CLOCK_HZ, ConfigError, all_supported_configs
from . import schemas


class CameraSession:
    def __init__(self):
        self.camera = ReferenceCamera()
        self.transport = LoopbackTransport(self.camera)
        self.lock = threading.Lock()

    def params(self) -> schemas.CameraParams:
        s = self.camera.state
        return schemas.CameraParams(
            width=s.width,
            height=s.height,
            depth=s.bits_per_pixel,
            taps=s.taps,
            mode=s.mode.value,
            clock_hz=s.pixel_clock_hz,
            pattern=format_pattern(s),
            line_gap=s.line_gap_clocks,
            frame_gap=s.frame_gap_clocks,
            running=s.running,
        )

    def run_config(self, overrides: dict) -> RunConfig:
        base = self.params()
        merged = {
            "mode": base.mode,
            "taps": base.taps,
            "depth": base.depth,
            "clock_hz": base.clock_hz,
            "width": base.width,
            "height": base.height,
            "pattern": base.pattern,
            "line_gap": base.line_gap,
            "frame_gap": base.frame_gap,
        }
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return RunConfig.from_mapping(merged)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="clgrab", version=__version__)
    session = CameraSession()
    app.state.session = session

    @app.get("/info", response_model=schemas.InfoResponse)
    def info():
        return schemas.InfoResponse(
            name="clgrab",
            version=__version__,
            camera_id=CAMERA_ID,
            max_pixel_clock_hz=MAX_PIXEL_CLOCK_HZ,
            supported_configs=[
                schemas.SupportedConfig(
                    mode=c.mode.value, taps=c.taps_per_clock, depth=c.bits_per_pixel
                )
                for c in all_supported_configs()
            ],
        )

    @app.get("/camera", response_model=schemas.CameraParams)
    def camera_params():
        with session.lock:
            return session.params()

    @app.post("/camera/command", response_model=schemas.CommandResponse)
    def camera_command(request: schemas.CommandRequest):
        line = request.line
        if not line.endswith("\r"):
            line += "\r"
        with session.lock:
            try:
                response = send_command(session.transport, line)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.CommandResponse(response=response)

    @app.post("/grab", response_model=schemas.GrabResponse)
    def grab(request: schemas.GrabRequest):
        overrides = request.model_dump(exclude={"output_dir", "frames", "user_meta"})
        with session.lock:
            cfg = session.run_config(overrides)
            cfg.frames = request.frames
            cfg.output_dir = request.output_dir
            cfg.user_meta = request.user_meta
            try:
                result = run_grab(cfg)
            except ConfigError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.GrabResponse(
            stats=schemas.GrabStats(
                frames_captured=result.stats.frames_captured,
                frames_dropped=result.stats.frames_dropped,
                bytes_written=result.stats.bytes_written,
                high_watermark_bytes=result.stats.high_watermark_bytes,
            ),
            files=result.files,
            ok=result.ok,
            error=result.error,
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(request: schemas.BenchRequest):
        overrides = request.model_dump(
            exclude={"duration_s", "bus_bits", "mem_clock_hz", "ddr", "cameras"}
        )
        with session.lock:
            cfg = session.run_config(overrides)
            cfg.bench_duration_s = request.duration_s
            cfg.bus_bits = request.bus_bits
            cfg.mem_clock_hz = request.mem_clock_hz
            cfg.ddr = request.ddr
            cfg.cameras = request.cameras
            try:
                report = run_bench(cfg)
            except ConfigError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.BenchResponse(
            raw_throughput_bps=report.raw_throughput_bps,
            raw_throughput_gbps=f"{report.raw_throughput_bps / 1e9:.3g}",
            memory_bandwidth_bps=report.memory_bandwidth_bps,
            memory_bandwidth_gbps=f"{report.memory_bandwidth_bps / 1e9:.3g}",
            headroom_num=report.headroom.numerator,
            headroom_den=report.headroom.denominator,
            headroom=float(report.headroom),
            cameras=report.cameras,
            measured_bytes_per_s=report.measured_bytes_per_s,
            cpu_bytes_per_s=report.cpu_bytes_per_s,
            line_rate_bytes_per_s=report.line_rate_bytes_per_s,
            bytes_processed=report.bytes_processed,
            frames_processed=report.frames_processed,
            duration_s=report.duration_s,
            cpu_s=report.cpu_s,
        )

    return app
