"""HTTP service wrapping the experiment harness.

Each endpoint validates a pydantic request model, runs the corresponding
deterministic simulation, and returns a JSON-serializable response model.
The CLI is a thin client of this service (in-process by default).
"""

from __future__ import annotations

from typing import List, Literal, Optional, Tuple

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import approx, frames, harness
from .approx import DctTerm, MpAtom, RbfTerm, WavePair

app = FastAPI(
    title="pincast",
    description="Broadcast shape control for pin-array surfaces: "
    "delay experiments, incremental shape approximation, and "
    "object-manipulation scripting on a simulated module array.",
    version="0.1.0",
)


class DelayBinaryRequest(BaseModel):
    n: int = Field(ge=2, le=1024)
    t_msg_ms: int = Field(default=5, ge=1, le=1000)
    method: Literal["seq", "dct", "broadcast"] = "dct"
    replicates: int = Field(default=20, ge=1, le=200)


class DelayWaveRequest(BaseModel):
    n: int = Field(ge=2, le=64)
    t_msg_ms: int = Field(default=5, ge=1, le=1000)
    method: Literal["seq", "wave", "broadcast"] = "wave"
    period_ms: int = Field(default=3000, ge=100, le=60000)
    replicates: int = Field(default=6, ge=1, le=50)


class DelayResponse(BaseModel):
    n: int
    t_msg_ms: int
    method: str
    tau_ms: float
    tau_pred_ms: float
    replicates: int


class ShapesRequest(BaseModel):
    shape: Literal["identity", "plane", "parabola", "checkers", "peak", "random"]
    method: Literal["seq", "dct", "mp"] = "mp"
    quantized: bool = False
    replicates: int = Field(default=6, ge=1, le=50)
    seed: int = Field(default=1, ge=0)
    terms: int = Field(default=16, ge=1, le=64)


class ErrorPoint(BaseModel):
    terms_used: int
    rel_error: float
    rel_error_pred: float


class ShapesResponse(BaseModel):
    shape: str
    method: str
    quantized: bool
    points: List[ErrorPoint]


class ManipulateRequest(BaseModel):
    waypoints: List[Tuple[float, float]] = Field(
        default_factory=lambda: [list(p) for p in harness.DEFAULT_RECT_WAYPOINTS]
    )
    rate_hz: float = Field(default=60.0, gt=0, le=1000)
    sigma: float = Field(default=1.0, gt=0)
    amplitude: float = Field(default=0.7, ge=0, le=2)
    duration_s: float = Field(default=2.0, gt=0, le=600)
    cols: int = Field(default=4, ge=1, le=64)
    rows: int = Field(default=4, ge=1, le=64)


class ManipulateTick(BaseModel):
    t_ms: float
    center_x: float
    center_y: float
    targets_mm: List[float]


class ManipulateResponse(BaseModel):
    cols: int
    rows: int
    rate_hz: float
    frames_sent: int
    pitch_mm: float
    ticks: List[ManipulateTick]


class EncodeRequest(BaseModel):
    form: Literal["dct", "mp", "rbf", "wave", "seq"]
    amplitude: Optional[float] = None
    index: Optional[int] = None
    scale: Optional[float] = None
    position: Optional[float] = None
    frequency: Optional[float] = None
    phase: Optional[float] = None
    width: Optional[float] = None
    center_x: Optional[float] = None
    center_y: Optional[float] = None
    wavevector: Optional[float] = None
    cos_amp: Optional[float] = None
    sin_amp: Optional[float] = None
    module_index: Optional[int] = None
    height_mm: Optional[float] = None


class EncodeResponse(BaseModel):
    form: str
    header_byte: int
    payload_hex: str
    wire_hex: str
    seq_id: Optional[int]
    decoded: dict


def _require(request: EncodeRequest, names: list[str]) -> list:
    values = []
    for name in names:
        value = getattr(request, name)
        if value is None:
            raise HTTPException(422, f"form {request.form!r} requires {name!r}")
        values.append(value)
    return values


def _build_term(request: EncodeRequest):
    if request.form == "dct":
        index, amplitude = _require(request, ["index", "amplitude"])
        return DctTerm(index, amplitude)
    if request.form == "mp":
        return MpAtom(*_require(
            request, ["amplitude", "scale", "position", "frequency", "phase"]))
    if request.form == "rbf":
        return RbfTerm(*_require(
            request, ["amplitude", "width", "center_x", "center_y"]))
    return WavePair(*_require(request, ["wavevector", "cos_amp", "sin_amp"]))


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": app.version}


@app.post("/delay/binary", response_model=DelayResponse)
def delay_binary(request: DelayBinaryRequest) -> DelayResponse:
    try:
        result = harness.run_delay_binary(
            request.n, request.t_msg_ms, request.method, request.replicates)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc
    return DelayResponse(**result.__dict__)


@app.post("/delay/wave", response_model=DelayResponse)
def delay_wave(request: DelayWaveRequest) -> DelayResponse:
    try:
        result = harness.run_delay_wave(
            request.n, request.t_msg_ms, request.method, request.period_ms,
            request.replicates)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc
    return DelayResponse(**result.__dict__)


@app.post("/shapes", response_model=ShapesResponse)
def shapes(request: ShapesRequest) -> ShapesResponse:
    try:
        curve = harness.run_shape_experiment(
            request.shape, request.method, request.quantized,
            replicates=request.replicates, seed=request.seed,
            max_terms=request.terms)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc
    points = [
        ErrorPoint(terms_used=m, rel_error=e, rel_error_pred=p)
        for (m, e), p in zip(curve.points, curve.pred_errors)
    ]
    return ShapesResponse(shape=curve.shape_name, method=curve.method,
                          quantized=curve.quantized, points=points)


@app.post("/manipulate", response_model=ManipulateResponse)
def manipulate(request: ManipulateRequest) -> ManipulateResponse:
    try:
        script = harness.TrajectoryScript(
            [tuple(p) for p in request.waypoints], request.rate_hz,
            request.sigma, request.amplitude, request.duration_s)
        result = harness.run_manipulation(script, request.cols, request.rows)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc
    ticks = [
        ManipulateTick(t_ms=t, center_x=cx, center_y=cy, targets_mm=targets)
        for t, (cx, cy), targets in result.ticks
    ]
    return ManipulateResponse(cols=result.cols, rows=result.rows,
                              rate_hz=result.rate_hz,
                              frames_sent=result.frames_sent,
                              pitch_mm=result.pitch_mm, ticks=ticks)


@app.post("/encode", response_model=EncodeResponse)
def encode(request: EncodeRequest) -> EncodeResponse:
    try:
        if request.form == "seq":
            module_index, height_mm = _require(
                request, ["module_index", "height_mm"])
            frame = frames.encode_seq_ref(module_index, height_mm)
        else:
            frame = frames.encode_term(_build_term(request))
        decoded = frames.decode_frame(frame)
    except (ValueError, TypeError) as exc:
        raise HTTPException(400, str(exc)) from exc
    return EncodeResponse(form=frame.form, header_byte=frame.header_byte,
                          payload_hex=frame.payload.hex(),
                          wire_hex=frame.to_wire().hex(), seq_id=frame.seq_id,
                          decoded=dict(decoded.__dict__))
