"""HTTP service: endpoint behavior, error mapping, session state."""

import numpy as np
import pytest
from PIL import Image

from clgrab import __version__
from clgrab.service import create_app


@pytest.fixture
def client():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    app = create_app()
    # zero the serial pacing so command tests run instantly
    app.state.session.transport.baud = 0
    with TestClient(app) as c:
        yield c


class TestInfo:
    def test_info(self, client):
        data = client.get("/info").json()
        assert data["version"] == __version__
        assert data["camera_id"] == "CLGRAB-SIM 1.0"
        assert data["max_pixel_clock_hz"] == 85_000_000
        assert len(data["supported_configs"]) == 9
        assert {"mode": "DECA", "taps": 10, "depth": 8} in data["supported_configs"]

    def test_camera_defaults(self, client):
        data = client.get("/camera").json()
        assert data["width"] == 1024 and data["mode"] == "BASE"
        assert data["running"] is False


class TestCommand:
    def test_ok(self, client):
        r = client.post("/camera/command", json={"line": "GET WIDTH"})
        assert r.status_code == 200
        assert r.json()["response"] == "OK 1024\r"

    def test_protocol_error_is_200(self, client):
        # the camera answered, so transport-wise the call succeeded
        r = client.post("/camera/command", json={"line": "GET GAIN"})
        assert r.status_code == 200
        assert r.json()["response"].startswith("ERR 1")

    def test_line_too_long_is_400(self, client):
        r = client.post("/camera/command", json={"line": "SET X " + "y" * 300})
        assert r.status_code == 400

    def test_set_persists_in_session(self, client):
        client.post("/camera/command", json={"line": "SET WIDTH 48"})
        assert client.get("/camera").json()["width"] == 48


class TestGrab:
    def test_grab_writes_files(self, client, tmp_path):
        r = client.post("/grab", json={
            "output_dir": str(tmp_path), "frames": 2, "width": 32, "height": 16,
        })
        assert r.status_code == 200
        data = r.json()
        assert data["ok"] and data["stats"]["frames_captured"] == 2
        assert len(data["files"]) == 2
        image = np.asarray(Image.open(data["files"][0]))
        assert image.shape == (16, 32)

    def test_grab_uses_session_camera_params(self, client, tmp_path):
        client.post("/camera/command", json={"line": "SET WIDTH 24"})
        client.post("/camera/command", json={"line": "SET HEIGHT 6"})
        r = client.post("/grab", json={"output_dir": str(tmp_path), "frames": 1})
        assert np.asarray(Image.open(r.json()["files"][0])).shape == (6, 24)

    def test_bad_geometry_is_400(self, client, tmp_path):
        r = client.post("/grab", json={
            "output_dir": str(tmp_path), "mode": "DECA", "taps": 10, "width": 33,
        })
        assert r.status_code == 400
        assert "33" in r.json()["detail"]

    def test_unsupported_config_is_400(self, client, tmp_path):
        r = client.post("/grab", json={
            "output_dir": str(tmp_path), "mode": "BASE", "taps": 10,
        })
        assert r.status_code == 400

    def test_validation_error_is_422(self, client):
        assert client.post("/grab", json={"frames": 1}).status_code == 422


class TestBench:
    def test_quick_bench(self, client):
        r = client.post("/bench", json={
            "duration_s": 0.1, "mode": "DECA", "taps": 10, "depth": 8,
            "width": 320, "height": 64,
        })
        assert r.status_code == 200
        data = r.json()
        assert data["raw_throughput_bps"] == 6_800_000_000
        assert data["raw_throughput_gbps"] == "6.8"
        assert data["memory_bandwidth_gbps"] == "68.2"
        assert (data["headroom_num"], data["headroom_den"]) == (1066, 425)
        assert data["headroom"] > 2
        assert data["line_rate_bytes_per_s"] == 850_000_000
        assert data["measured_bytes_per_s"] > 0 and data["cpu_bytes_per_s"] > 0

    def test_bench_bad_config_is_400(self, client):
        r = client.post("/bench", json={"mode": "MEDIUM", "taps": 2})
        assert r.status_code == 400
