"""Camera Link frame-grabber toolkit: link codec, tap mapping, simulated
camera, acquisition pipeline, TIFF/DMA sinks, control protocol, and an HTTP
service with a CLI front end."""

__version__ = "0.1.0"
