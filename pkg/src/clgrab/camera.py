"""Simulated Camera Link camera: pattern frames, sync timing, control protocol.

The camera emits FVAL/LVAL/DVAL-framed video and answers a CR-terminated
command protocol on its serial side:

    GET <PARAM> | SET <PARAM> <VALUE> | START | STOP | ID

Params: WIDTH, HEIGHT, DEPTH, TAPS, MODE, CLOCK_HZ, PATTERN, LINE_GAP,
FRAME_GAP. Responses: "OK\\r" | "OK <value>\\r" | "ERR <code> <message>\\r"
with codes 1 unknown parameter, 2 bad value, 3 bad command, 4 not allowed
while running. Link parameters (WIDTH..CLOCK_HZ) are locked while running;
pattern and gap changes are staged and applied at the next frame boundary.
SET checks each value on its own; cross-parameter consistency (mode/taps
pairing, width divisibility) is enforced when streaming starts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .taps import CLConfig, CLMode, ConfigError, SUPPORTED_GEOMETRIES, VideoStream

CAMERA_ID = "CLGRAB-SIM 1.0"

ERR_UNKNOWN_PARAM = 1
ERR_BAD_VALUE = 2
ERR_BAD_COMMAND = 3
ERR_LOCKED = 4


class GeometryMismatchError(ValueError):
    """Frame does not match the camera geometry."""


class Pattern(enum.Enum):
    GRADIENT = "GRADIENT"
    CHECKER = "CHECKER"
    COUNTER = "COUNTER"
    RANDOM = "RANDOM"


@dataclass
class Frame:
    width: int
    height: int
    bits_per_pixel: int
    pixels: np.ndarray  # flat, row-major, length width*height

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryMismatchError(f"bad geometry {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise GeometryMismatchError(
                f"{len(self.pixels)} pixels for {self.width}x{self.height} frame"
            )

    @property
    def container_bytes(self) -> int:
        return 1 if self.bits_per_pixel == 8 else 2

    @property
    def byte_count(self) -> int:
        return self.width * self.height * self.container_bytes

    def to_bytes(self) -> bytes:
        dtype = np.dtype(np.uint8 if self.container_bytes == 1 else "<u2")
        return self.pixels.astype(dtype, copy=False).tobytes()


@dataclass
class CameraState:
    width: int = 1024
    height: int = 1024
    bits_per_pixel: int = 8
    taps: int = 1
    mode: CLMode = CLMode.BASE
    pixel_clock_hz: int = 85_000_000
    pattern: Pattern = Pattern.GRADIENT
    pattern_seed: int = 0
    line_gap_clocks: int = 4
    frame_gap_clocks: int = 8
    running: bool = False

    def config(self) -> CLConfig:
        return CLConfig(self.mode, self.taps, self.bits_per_pixel, self.pixel_clock_hz)

    def validate(self) -> None:
        self.config()  # raises ConfigError on bad mode/taps/depth/clock
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"bad geometry {self.width}x{self.height}")
        if self.width % self.taps:
            raise ConfigError(f"width {self.width} not divisible by {self.taps} taps")
        if self.line_gap_clocks < 1 or self.frame_gap_clocks < 1:
            raise ConfigError("line and frame gaps must be at least 1 clock")


def generate_frame(state: CameraState, frame_number: int) -> Frame:
    """Deterministic test frame for (state, frame_number)."""
    w, h, depth = state.width, state.height, state.bits_per_pixel
    modulus = 1 << depth
    dtype = np.uint8 if depth == 8 else np.uint16
    if state.pattern is Pattern.GRADIENT:
        pixels = (np.add.outer(np.arange(h), np.arange(w)) % modulus).ravel()
    elif state.pattern is Pattern.CHECKER:
        even = np.add.outer(np.arange(h), np.arange(w)) % 2 == 0
        pixels = np.where(even, modulus - 1, 0).ravel()
    elif state.pattern is Pattern.COUNTER:
        pixels = (np.arange(w * h, dtype=np.uint64) + frame_number) % modulus
    else:
        rng = np.random.default_rng((state.pattern_seed, frame_number))
        pixels = rng.integers(0, modulus, w * h)
    return Frame(w, h, depth, pixels.astype(dtype))


def emit_video(state: CameraState, frames: list[Frame]) -> VideoStream:
    """Wrap frames in sync timing.

    One all-low lead-in clock, then per frame: FVAL high from the first to the
    last active clock, LVAL=DVAL high for width/taps clocks per line,
    `line_gap_clocks` of LVAL-low between lines, `frame_gap_clocks` of all-low
    after each frame.
    """
    state.validate()
    config = state.config()
    taps = state.taps
    clocks_per_line = state.width // taps
    for frame in frames:
        if (frame.width, frame.height, frame.bits_per_pixel) != (
            state.width,
            state.height,
            state.bits_per_pixel,
        ):
            raise GeometryMismatchError(
                f"frame {frame.width}x{frame.height}@{frame.bits_per_pixel} does not "
                f"match camera {state.width}x{state.height}@{state.bits_per_pixel}"
            )
    line_stride = clocks_per_line + state.line_gap_clocks
    per_frame = state.height * clocks_per_line + (state.height - 1) * state.line_gap_clocks
    total = 1 + len(frames) * (per_frame + state.frame_gap_clocks)

    pixels = np.zeros((total, taps), dtype=config.container_dtype)
    lval = np.zeros(total, dtype=bool)
    fval = np.zeros(total, dtype=bool)
    dval = np.zeros(total, dtype=bool)

    line_starts = np.arange(state.height) * line_stride
    active = (line_starts[:, None] + np.arange(clocks_per_line)).ravel()
    base = 1
    for frame in frames:
        idx = base + active
        pixels[idx] = frame.pixels.reshape(state.height * clocks_per_line, taps)
        lval[idx] = True
        dval[idx] = True
        fval[base:base + per_frame] = True
        base += per_frame + state.frame_gap_clocks
    return VideoStream(pixels=pixels, lval=lval, fval=fval, dval=dval)


def format_pattern(state: CameraState) -> str:
    if state.pattern is Pattern.RANDOM:
        return f"RANDOM:{state.pattern_seed}"
    return state.pattern.value


def parse_pattern(state: CameraState, value: str) -> None:
    name, _, seed = value.upper().partition(":")
    try:
        pattern = Pattern(name)
    except ValueError:
        raise ValueError(value) from None
    if seed and pattern is not Pattern.RANDOM:
        raise ValueError(value)
    state.pattern = pattern
    if pattern is Pattern.RANDOM:
        state.pattern_seed = int(seed) if seed else 0


def _set_int(attr, lo, hi, allowed=None):
    def setter(state: CameraState, value: str) -> None:
        number = int(value)
        if not lo <= number <= hi or (allowed and number not in allowed):
            raise ValueError(value)
        setattr(state, attr, number)
    return setter


_DEPTHS = frozenset(d for pairs in SUPPORTED_GEOMETRIES.values() for _, d in pairs)
_TAPS = frozenset(t for pairs in SUPPORTED_GEOMETRIES.values() for t, _ in pairs)

# name -> (getter, setter, locked-while-running)
_PARAMS = {
    "WIDTH": (lambda s: str(s.width), _set_int("width", 1, 65535), True),
    "HEIGHT": (lambda s: str(s.height), _set_int("height", 1, 65535), True),
    "DEPTH": (lambda s: str(s.bits_per_pixel),
              _set_int("bits_per_pixel", 8, 16, _DEPTHS), True),
    "TAPS": (lambda s: str(s.taps), _set_int("taps", 1, 10, _TAPS), True),
    "MODE": (
        lambda s: s.mode.value,
        lambda s, v: setattr(s, "mode", CLMode(v.upper())),
        True,
    ),
    "CLOCK_HZ": (lambda s: str(s.pixel_clock_hz), _set_int("pixel_clock_hz", 1, 85_000_000), True),
    "PATTERN": (format_pattern, parse_pattern, False),
    "LINE_GAP": (lambda s: str(s.line_gap_clocks), _set_int("line_gap_clocks", 1, 65535), False),
    "FRAME_GAP": (lambda s: str(s.frame_gap_clocks), _set_int("frame_gap_clocks", 1, 65535), False),
}

PARAM_NAMES = tuple(_PARAMS)


class ReferenceCamera:
    """Single-owner camera state machine: video emission plus command handling.

    Commands interleave with streaming only at frame boundaries: staged
    changes to unlocked params are committed by :meth:`next_frame`.
    """

    def __init__(self, state: CameraState | None = None):
        self.state = state or CameraState()
        self.state.validate()
        self._staged: dict[str, str] = {}
        self.frame_counter = 0

    # -- video side ------------------------------------------------------

    def next_frame(self) -> Frame:
        self._commit_staged()
        frame = generate_frame(self.state, self.frame_counter)
        self.frame_counter += 1
        return frame

    def emit(self, frame_count: int) -> VideoStream:
        frames = [self.next_frame() for _ in range(frame_count)]
        return emit_video(self.state, frames)

    def _commit_staged(self) -> None:
        for name, value in self._staged.items():
            _PARAMS[name][1](self.state, value)
        self._staged.clear()

    # -- control side ----------------------------------------------------

    def handle_command(self, line: str) -> str:
        tokens = line.rstrip("\r").split()
        if not tokens:
            return _err(ERR_BAD_COMMAND, "bad command")
        verb = tokens[0].upper()
        if verb == "ID" and len(tokens) == 1:
            return f"OK {CAMERA_ID}\r"
        if verb == "START" and len(tokens) == 1:
            # cross-parameter consistency is enforced here, not per SET, so
            # any supported configuration is reachable one parameter at a time
            try:
                self.state.validate()
            except ConfigError:
                return _err(ERR_BAD_VALUE, "bad value")
            self.state.running = True
            return "OK\r"
        if verb == "STOP" and len(tokens) == 1:
            self.state.running = False
            self._commit_staged()
            return "OK\r"
        if verb == "GET" and len(tokens) == 2:
            return self._get(tokens[1].upper())
        if verb == "SET" and len(tokens) == 3:
            return self._set(tokens[1].upper(), tokens[2])
        return _err(ERR_BAD_COMMAND, "bad command")

    def _get(self, name: str) -> str:
        if name not in _PARAMS:
            return _err(ERR_UNKNOWN_PARAM, "unknown parameter")
        if name in self._staged:
            # staged value is the one a subsequent frame will use
            probe = replace(self.state)
            _PARAMS[name][1](probe, self._staged[name])
            return f"OK {_PARAMS[name][0](probe)}\r"
        return f"OK {_PARAMS[name][0](self.state)}\r"

    def _set(self, name: str, value: str) -> str:
        if name not in _PARAMS:
            return _err(ERR_UNKNOWN_PARAM, "unknown parameter")
        _, setter, locked = _PARAMS[name]
        if self.state.running and locked:
            return _err(ERR_LOCKED, "not allowed while running")
        candidate = replace(self.state)
        try:
            setter(candidate, value)
        except (ValueError, ConfigError):
            return _err(ERR_BAD_VALUE, "bad value")
        if self.state.running:
            self._staged[name] = value
        else:
            setter(self.state, value)
        return "OK\r"


def _err(code: int, message: str) -> str:
    return f"ERR {code} {message}\r"
