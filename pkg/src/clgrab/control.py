"""Layered camera control: a character transport at the bottom, one
camera-protocol library per camera type on top.

The camera library never touches the transport except through
:func:`send_command` - one CR-terminated line out, exactly one line back, no
pipelining. New camera types plug in by registering a client class against
the prefix of their ID response.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .camera import ReferenceCamera

MAX_LINE_CHARS = 256
DEFAULT_BAUD = 9600
DEFAULT_TIMEOUT_S = 0.5


class ResponseTimeout(Exception):
    """No response line arrived within the transport timeout."""


class LineTooLongError(ValueError):
    """Command line exceeds the 256-character limit."""


class UnknownParamError(KeyError):
    """Parameter not in the camera library's descriptor table."""


class OutOfRangeError(ValueError):
    """Client-side validation rejected the value before any transport traffic."""


class RemoteError(Exception):
    """Camera answered ERR <code> <message>."""

    def __init__(self, code: int, message: str):
        super().__init__(f"ERR {code} {message}")
        self.code = code
        self.message = message


class Transport(ABC):
    """Ordered, lossless bidirectional character channel with baud pacing."""

    baud: int = DEFAULT_BAUD
    timeout_s: float = DEFAULT_TIMEOUT_S

    @abstractmethod
    def write(self, chars: str) -> None:
        ...

    @abstractmethod
    def read_line(self) -> str:
        """Next CR-terminated response line; raises ResponseTimeout."""


class LoopbackTransport(Transport):
    """In-process channel to a simulated camera."""

    def __init__(self, camera: ReferenceCamera, baud: int = DEFAULT_BAUD,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.camera = camera
        self.baud = baud
        self.timeout_s = timeout_s
        self._rx_buffer = ""
        self._responses: list[str] = []

    def _pace(self, nchars: int) -> None:
        if self.baud:
            time.sleep(nchars / self.baud)

    def write(self, chars: str) -> None:
        self._pace(len(chars))
        self._rx_buffer += chars
        while "\r" in self._rx_buffer:
            line, _, self._rx_buffer = self._rx_buffer.partition("\r")
            self._responses.append(self.camera.handle_command(line + "\r"))

    def read_line(self) -> str:
        if not self._responses:
            time.sleep(self.timeout_s)
            raise ResponseTimeout(f"no response within {self.timeout_s} s")
        line = self._responses.pop(0)
        self._pace(len(line))
        return line


class DisconnectedTransport(Transport):
    """A cable to nowhere; every read times out."""

    def __init__(self, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.timeout_s = timeout_s

    def write(self, chars: str) -> None:
        pass

    def read_line(self) -> str:
        time.sleep(self.timeout_s)
        raise ResponseTimeout(f"no response within {self.timeout_s} s")


def send_command(transport: Transport, line: str) -> str:
    """Write one CR-terminated command line and return the raw response line."""
    if not line.endswith("\r"):
        raise ValueError("command line must be CR-terminated")
    if len(line) > MAX_LINE_CHARS:
        raise LineTooLongError(f"{len(line)} chars exceed the {MAX_LINE_CHARS} limit")
    transport.write(line)
    return transport.read_line()


@dataclass(frozen=True)
class ParamDescriptor:
    name: str
    kind: str  # "int" | "enum"
    minimum: int | None = None
    maximum: int | None = None
    choices: tuple[str, ...] | None = None
    read_only: bool = False

    def validate(self, value) -> str:
        if self.kind == "int":
            number = int(value)
            if (self.minimum is not None and number < self.minimum) or (
                self.maximum is not None and number > self.maximum
            ):
                raise OutOfRangeError(f"{self.name}={value} outside "
                                      f"[{self.minimum}, {self.maximum}]")
            return str(number)
        text = str(value).upper()
        base = text.partition(":")[0]
        if self.choices and base not in self.choices:
            raise OutOfRangeError(f"{self.name}={value} not one of {self.choices}")
        return text


REFERENCE_PARAMS = {
    p.name: p
    for p in (
        ParamDescriptor("WIDTH", "int", 1, 65535),
        ParamDescriptor("HEIGHT", "int", 1, 65535),
        ParamDescriptor("DEPTH", "int", 8, 16),
        ParamDescriptor("TAPS", "int", 1, 10),
        ParamDescriptor("MODE", "enum", choices=("BASE", "MEDIUM", "FULL", "DECA")),
        ParamDescriptor("CLOCK_HZ", "int", 1, 85_000_000),
        ParamDescriptor("PATTERN", "enum",
                        choices=("GRADIENT", "CHECKER", "COUNTER", "RANDOM")),
        ParamDescriptor("LINE_GAP", "int", 1, 65535),
        ParamDescriptor("FRAME_GAP", "int", 1, 65535),
    )
}


class CameraClient:
    """Typed GET/SET wrapper speaking the reference protocol."""

    ID_PREFIX = "CLGRAB-SIM"
    params = REFERENCE_PARAMS

    def __init__(self, transport: Transport):
        self.transport = transport

    def _exchange(self, line: str) -> str:
        response = send_command(self.transport, line).rstrip("\r")
        if response.startswith("OK"):
            return response[2:].strip()
        if response.startswith("ERR"):
            parts = response.split(" ", 2)
            raise RemoteError(int(parts[1]), parts[2] if len(parts) > 2 else "")
        raise RemoteError(-1, f"malformed response {response!r}")

    def _descriptor(self, name: str) -> ParamDescriptor:
        try:
            return self.params[name.upper()]
        except KeyError:
            raise UnknownParamError(name) from None

    def get_param(self, name: str) -> int | str:
        descriptor = self._descriptor(name)
        value = self._exchange(f"GET {descriptor.name}\r")
        return int(value) if descriptor.kind == "int" else value

    def set_param(self, name: str, value) -> None:
        descriptor = self._descriptor(name)
        if descriptor.read_only:
            raise OutOfRangeError(f"{descriptor.name} is read-only")
        wire = descriptor.validate(value)
        self._exchange(f"SET {descriptor.name} {wire}\r")

    def start(self) -> None:
        self._exchange("START\r")

    def stop(self) -> None:
        self._exchange("STOP\r")

    def identify(self) -> str:
        return self._exchange("ID\r")


#: ID-response prefix -> client class. New camera types register here.
CAMERA_LIBRARIES: dict[str, type[CameraClient]] = {}


def register_camera_library(id_prefix: str, cls: type[CameraClient]) -> None:
    CAMERA_LIBRARIES[id_prefix] = cls


def open_camera(transport: Transport) -> CameraClient:
    """Identify the device and hand back the matching camera library client."""
    ident = CameraClient(transport).identify()
    for prefix, cls in CAMERA_LIBRARIES.items():
        if ident.startswith(prefix):
            return cls(transport)
    raise UnknownParamError(f"no camera library for {ident!r}")


register_camera_library(CameraClient.ID_PREFIX, CameraClient)
