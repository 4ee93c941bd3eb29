"""Command-line front end.

The CLI is a thin HTTP client for the service. By default it spins the
service up in-process (no sockets); pass ``--server URL`` to talk to a
running instance instead.

Exit codes: 0 success, 1 run completed with drops or a pipeline error,
2 configuration rejected, 3 transport or camera error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import httpx

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_TRANSPORT = 3


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=300.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _request(client, method: str, path: str, **kwargs):
    try:
        response = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_TRANSPORT)
    if response.status_code == 400:
        click.echo(f"error: {response.json()['detail']}", err=True)
        sys.exit(EXIT_BAD_CONFIG)
    if response.status_code >= 400:
        click.echo(f"error: HTTP {response.status_code}: {response.text}", err=True)
        sys.exit(EXIT_TRANSPORT)
    return response.json()


def _load_config_file(path: str | None) -> dict[str, str]:
    """key=value lines; blank lines and # comments ignored."""
    if path is None:
        return {}
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            click.echo(f"error: {path}:{lineno}: expected key=value", err=True)
            sys.exit(EXIT_BAD_CONFIG)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


_GEOMETRY_OPTIONS = [
    click.option("--width", type=int, default=None, help="Frame width in pixels."),
    click.option("--height", type=int, default=None, help="Frame height in pixels."),
    click.option("--depth", type=int, default=None, help="Bits per pixel."),
    click.option("--taps", type=int, default=None, help="Pixels per clock."),
    click.option("--mode", type=str, default=None,
                 help="Link configuration: BASE, MEDIUM, FULL, or DECA."),
    click.option("--clock-hz", type=int, default=None, help="Pixel clock in Hz."),
    click.option("--pattern", type=str, default=None,
                 help="Test pattern: GRADIENT, CHECKER, COUNTER, RANDOM[:seed]."),
    click.option("--line-gap", type=int, default=None,
                 help="Idle clocks between lines."),
    click.option("--frame-gap", type=int, default=None,
                 help="Idle clocks between frames."),
]


def _with_options(options):
    def wrap(command):
        for option in reversed(options):
            command = option(command)
        return command
    return wrap


def _merge(config_file: str | None, flags: dict) -> dict:
    merged = _load_config_file(config_file)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _kv(data: dict) -> str:
    return "\n".join(f"{k}={v}" for k, v in data.items()) + "\n"


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Service URL; defaults to an in-process service.")
@click.pass_context
def main(ctx, server):
    """Camera Link frame-grabber toolkit."""
    ctx.obj = server


@main.command()
@click.argument("output_dir")
@click.option("--frames", type=int, default=3, show_default=True,
              help="Number of frames to grab.")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="key=value config file; flags override it.")
@_with_options(_GEOMETRY_OPTIONS)
@click.option("--vfifo-capacity", type=int, default=None)
@click.option("--vfifo-page", type=int, default=None)
@click.option("--report", type=click.Choice(["text", "key=value"]), default="text",
              show_default=True)
@click.pass_obj
def grab(server, output_dir, frames, config_file, report, **flags):
    """Grab frames and write one TIFF file per frame into OUTPUT_DIR."""
    body = _merge(config_file, flags)
    body["output_dir"] = output_dir
    body["frames"] = frames
    with _client(server) as client:
        data = _request(client, "POST", "/grab", json=body)
    if report == "key=value":
        stats = dict(data["stats"])
        stats["files"] = len(data["files"])
        if data["error"]:
            stats["error"] = data["error"]
        click.echo(_kv(stats), nl=False)
    else:
        s = data["stats"]
        click.echo(
            f"captured {s['frames_captured']} frame(s), "
            f"dropped {s['frames_dropped']}, {s['bytes_written']} bytes "
            f"(high watermark {s['high_watermark_bytes']} bytes), "
            f"{len(data['files'])} file(s) written"
        )
        if data["error"]:
            click.echo(f"error: {data['error']}")
    sys.exit(EXIT_OK if data["ok"] else EXIT_RUN_FAILED)


@main.command()
@click.option("--duration", "duration_s", type=float, default=3.0, show_default=True,
              help="Minimum measured streaming time in seconds.")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="key=value config file; flags override it.")
@_with_options(_GEOMETRY_OPTIONS)
@click.option("--cameras", type=int, default=2, show_default=True,
              help="Concurrent cameras assumed for the headroom figure.")
@click.option("--report", type=click.Choice(["text", "key=value"]), default="text",
              show_default=True)
@click.pass_obj
def bench(server, duration_s, config_file, cameras, report, **flags):
    """Benchmark the pipeline (defaults to the fastest supported setup)."""
    body = {"mode": "DECA", "taps": 10, "depth": 8, "width": 1040, "height": 1024}
    body.update(_merge(config_file, flags))
    body["duration_s"] = duration_s
    body["cameras"] = cameras
    with _client(server) as client:
        data = _request(client, "POST", "/bench", json=body)
    if report == "key=value":
        click.echo(_kv(data), nl=False)
    else:
        click.echo(
            f"raw link throughput: {data['raw_throughput_gbps']} Gb/s "
            f"({data['raw_throughput_bps']} b/s)\n"
            f"memory bandwidth:    {data['memory_bandwidth_gbps']} Gb/s "
            f"({data['memory_bandwidth_bps']} b/s)\n"
            f"headroom over {data['cameras']} camera(s) x2: "
            f"{data['headroom_num']}/{data['headroom_den']} "
            f"= {data['headroom']:.3f}\n"
            f"measured pipeline:   {data['measured_bytes_per_s'] / 1e6:.1f} MB/s "
            f"({data['frames_processed']} frames, {data['bytes_processed']} bytes "
            f"in {data['duration_s']:.2f} s)\n"
            f"per CPU second:      {data['cpu_bytes_per_s'] / 1e6:.1f} MB/s "
            f"({data['cpu_s']:.2f} s of CPU time)\n"
            f"hardware line rate:  {data['line_rate_bytes_per_s'] / 1e6:.0f} MB/s "
            "equivalent"
        )
    sys.exit(EXIT_OK)


@main.command()
@click.argument("words", nargs=-1, required=True)
@click.pass_obj
def ctl(server, words):
    """Send one control-protocol line to the camera, e.g. `ctl GET WIDTH`."""
    line = " ".join(words)
    with _client(server) as client:
        data = _request(client, "POST", "/camera/command", json={"line": line})
    response = data["response"].rstrip("\r")
    if response.startswith("OK"):
        click.echo(response[2:].strip() or "OK")
        sys.exit(EXIT_OK)
    click.echo(response, err=True)
    sys.exit(EXIT_TRANSPORT)


@main.command()
@click.option("--report", type=click.Choice(["text", "key=value"]), default="text",
              show_default=True)
@click.pass_obj
def info(server, report):
    """Show service version, camera identity, and supported configurations."""
    with _client(server) as client:
        data = _request(client, "GET", "/info")
        camera = _request(client, "GET", "/camera")
    if report == "key=value":
        flat = {k: v for k, v in data.items() if k != "supported_configs"}
        flat["supported_configs"] = ",".join(
            f"{c['mode']}:{c['taps']}T{c['depth']}" for c in data["supported_configs"]
        )
        flat.update({f"camera_{k}": v for k, v in camera.items()})
        click.echo(_kv(flat), nl=False)
    else:
        click.echo(f"{data['name']} {data['version']} — camera {data['camera_id']}")
        click.echo(f"max pixel clock: {data['max_pixel_clock_hz']} Hz")
        click.echo("supported configurations:")
        for c in data["supported_configs"]:
            click.echo(f"  {c['mode']:<6} {c['taps']} tap(s) x {c['depth']} bit")
        click.echo(
            f"camera: {camera['width']}x{camera['height']}@{camera['depth']}bit, "
            f"{camera['taps']} tap(s), {camera['mode']}, {camera['clock_hz']} Hz, "
            f"pattern {camera['pattern']}, "
            f"{'running' if camera['running'] else 'stopped'}"
        )
    sys.exit(EXIT_OK)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
