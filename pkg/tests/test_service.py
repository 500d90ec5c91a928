"""HTTP service surface: request validation and response schemas."""

import math

import pytest
from fastapi.testclient import TestClient

from pincast import frames
from pincast.approx import MpAtom
from pincast.service import app

client = TestClient(app)


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


# ------------------------------------------------------------ delay/binary ---

def test_delay_binary_sequential():
    r = client.post("/delay/binary",
                    json={"n": 8, "t_msg_ms": 5, "method": "seq",
                          "replicates": 3})
    assert r.status_code == 200
    body = r.json()
    assert body["tau_pred_ms"] == 35.0
    assert body["tau_ms"] == pytest.approx(35.0, abs=1.0)
    assert body["method"] == "seq"


def test_delay_binary_broadcast_default_method_is_broadcast_capable():
    r = client.post("/delay/binary",
                    json={"n": 8, "method": "broadcast", "replicates": 3})
    assert r.status_code == 200
    assert r.json()["tau_pred_ms"] == 0.0


def test_delay_binary_validation():
    assert client.post("/delay/binary", json={"n": 1}).status_code == 422
    assert client.post("/delay/binary",
                       json={"n": 4, "method": "pigeon"}).status_code == 422
    assert client.post("/delay/binary",
                       json={"n": 4, "replicates": 0}).status_code == 422


# -------------------------------------------------------------- delay/wave ---

def test_delay_wave():
    r = client.post("/delay/wave",
                    json={"n": 2, "method": "wave", "period_ms": 2000,
                          "replicates": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["tau_pred_ms"] == pytest.approx(500.0)
    assert body["tau_ms"] == pytest.approx(500.0, rel=0.02)


def test_delay_wave_validation():
    assert client.post("/delay/wave",
                       json={"n": 2, "period_ms": 50}).status_code == 422


# ------------------------------------------------------------------ shapes ---

def test_shapes_endpoint():
    r = client.post("/shapes",
                    json={"shape": "peak", "method": "mp", "quantized": False,
                          "replicates": 1, "terms": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["shape"] == "peak"
    assert body["method"] == "mp"
    assert body["quantized"] is False
    assert body["points"][0]["terms_used"] == 1
    assert body["points"][0]["rel_error"] < 0.01
    assert body["points"][0]["rel_error_pred"] < 0.01


def test_shapes_validation():
    assert client.post("/shapes", json={"shape": "blob"}).status_code == 422
    assert client.post("/shapes",
                       json={"shape": "peak", "terms": 0}).status_code == 422


# -------------------------------------------------------------- manipulate ---

def test_manipulate_defaults():
    r = client.post("/manipulate", json={})
    assert r.status_code == 200
    body = r.json()
    assert body["frames_sent"] == 120
    assert len(body["ticks"]) == 120
    assert body["pitch_mm"] == 25.0
    assert len(body["ticks"][0]["targets_mm"]) == 16


def test_manipulate_custom_grid():
    r = client.post("/manipulate", json={"cols": 2, "rows": 3,
                                         "duration_s": 0.5, "rate_hz": 20})
    assert r.status_code == 200
    body = r.json()
    assert body["frames_sent"] == 10
    assert len(body["ticks"][0]["targets_mm"]) == 6


def test_manipulate_validation():
    assert client.post("/manipulate",
                       json={"waypoints": [[0, 0]]}).status_code in (400, 422)
    assert client.post("/manipulate", json={"sigma": 0}).status_code == 422


# ------------------------------------------------------------------ encode ---

def test_encode_round_trips_mp_atom():
    payload = {"form": "mp", "amplitude": 1.3, "scale": 4.0, "position": 8.0,
               "frequency": 2.0, "phase": 0.7}
    r = client.post("/encode", json=payload)
    assert r.status_code == 200
    body = r.json()
    # oracle: encode the same atom directly
    frame = frames.encode_term(MpAtom(1.3, 4.0, 8.0, 2.0, 0.7))
    assert body["header_byte"] == frame.header_byte == 0x02
    assert body["payload_hex"] == frame.payload.hex()
    assert body["wire_hex"] == frame.to_wire().hex()
    decoded = body["decoded"]
    assert decoded["amplitude"] == pytest.approx(1.3, abs=4 / 65535)
    assert decoded["phase"] == pytest.approx(0.7, abs=2 * math.pi / 256)


def test_encode_wave_golden():
    k = 2 * math.pi / 60.0
    r = client.post("/encode", json={"form": "wave", "wavevector": k,
                                     "cos_amp": 1.0, "sin_amp": -0.5})
    assert r.status_code == 200
    assert r.json()["wire_hex"] == "04670dffbf00600000"


def test_encode_seq_includes_identifier():
    r = client.post("/encode", json={"form": "seq", "module_index": 7,
                                     "height_mm": 35.0})
    assert r.status_code == 200
    body = r.json()
    assert body["seq_id"] == 7
    assert body["header_byte"] == 0x05


def test_encode_missing_fields_rejected():
    assert client.post("/encode", json={"form": "mp"}).status_code == 422
    assert client.post("/encode",
                       json={"form": "dct", "amplitude": 1.0}).status_code == 422


def test_encode_out_of_range_values_rejected():
    r = client.post("/encode", json={"form": "seq",
                                     "module_index": 4096, "height_mm": 0.0})
    assert r.status_code == 400
