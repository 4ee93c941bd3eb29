"""Shared test fixtures and stream-building helpers."""

from __future__ import annotations

import numpy as np
import pytest

from clgrab.taps import CLConfig, VideoStream, all_supported_configs


def random_stream(rng: np.random.Generator, config: CLConfig, n: int) -> VideoStream:
    """n clocks of random pixels and random (independent) sync flags."""
    px = rng.integers(0, 1 << config.bits_per_pixel,
                      (n, config.taps_per_clock)).astype(config.container_dtype)
    return VideoStream(
        pixels=px,
        lval=rng.integers(0, 2, n).astype(bool),
        fval=rng.integers(0, 2, n).astype(bool),
        dval=rng.integers(0, 2, n).astype(bool),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC1_1A_B0)


@pytest.fixture(params=all_supported_configs(), ids=lambda c: f"{c.mode.value}-{c.taps_per_clock}T{c.bits_per_pixel}")
def config(request) -> CLConfig:
    return request.param


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines past pytest's output capture."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
