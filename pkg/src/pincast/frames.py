"""Wire format: one approximation term per 8-byte broadcast payload.

Every message carries a 1-byte function-form header followed by exactly
8 payload bytes (the size of one standard CAN data frame).  Coefficients
are quantized to the fixed field table below; sequential frames instead
carry the module index as the message identifier and the commanded height
in the payload.

Byte layout is little-endian.  Reserved bytes are zero on encode and
ignored on decode.  The exact ranges, endianness, and reserved-byte
placement are normative for this artifact and documented with golden
vectors in docs/wire_format.md.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

from . import approx
from .approx import DctTerm, MpAtom, RbfTerm, SeqRef, Term, WavePair

ARRAY_N = 16  # field ranges are sized for the 4x4 reference array
STROKE_MM = approx.STROKE_MM

FORM_DCT = "DCT"
FORM_MP = "MP"
FORM_RBF = "RBF"
FORM_WAVE = "WAVE"
FORM_SEQ = "SEQ"

HEADER_BY_FORM = {
    FORM_DCT: 0x01,
    FORM_MP: 0x02,
    FORM_RBF: 0x03,
    FORM_WAVE: 0x04,
    FORM_SEQ: 0x05,
}
FORM_BY_HEADER = {v: k for k, v in HEADER_BY_FORM.items()}

PAYLOAD_BYTES = 8


class FrameError(ValueError):
    """Malformed frame or unknown header."""


@dataclass
class QuantSpec:
    bits: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.bits not in (8, 16):
            raise ValueError("bits must be 8 or 16")
        if not self.hi > self.lo:
            raise ValueError("max must exceed min")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (2**self.bits - 1)


def _half_open_top(bits: int, span: float) -> QuantSpec:
    """[0, span): highest code sits one step below the open end."""
    return QuantSpec(bits, 0.0, span * (2**bits - 1) / 2**bits)


def _half_open_bottom(bits: int, span: float) -> QuantSpec:
    """(0, span]: lowest code sits one step above zero."""
    return QuantSpec(bits, span / 2**bits, span)


QUANT = {
    "mp.amplitude": QuantSpec(16, -2.0, 2.0),
    "mp.scale": _half_open_bottom(16, 2.0 * ARRAY_N),
    "mp.position": _half_open_top(8, float(ARRAY_N)),
    "mp.frequency": QuantSpec(8, 0.0, ARRAY_N / 2.0),
    "mp.phase": _half_open_top(8, 2.0 * math.pi),
    "dct.amplitude": QuantSpec(16, -2.0, 2.0),
    "rbf.amplitude": QuantSpec(16, 0.0, 2.0),
    "rbf.width": _half_open_bottom(8, 2.0 * ARRAY_N),
    "rbf.center": QuantSpec(16, -float(ARRAY_N), 2.0 * ARRAY_N),
    "wave.wavevector": QuantSpec(16, 0.0, 2.0),
    "wave.amp": QuantSpec(16, -2.0, 2.0),
    "seq.height": QuantSpec(16, 0.0, STROKE_MM),
}


@dataclass
class Frame:
    form: str
    payload: bytes
    seq_id: Optional[int] = None

    def __post_init__(self):
        if self.form not in HEADER_BY_FORM:
            raise FrameError(f"unknown form: {self.form!r}")
        self.payload = bytes(self.payload)
        if len(self.payload) != PAYLOAD_BYTES:
            raise FrameError("payload must be exactly 8 bytes")

    @property
    def header_byte(self) -> int:
        return HEADER_BY_FORM[self.form]

    def to_wire(self) -> bytes:
        return bytes([self.header_byte]) + self.payload

    @classmethod
    def from_wire(cls, data: bytes, seq_id: Optional[int] = None) -> "Frame":
        data = bytes(data)
        if len(data) != PAYLOAD_BYTES + 1:
            raise FrameError("wire frame must be 9 bytes (header + payload)")
        form = FORM_BY_HEADER.get(data[0])
        if form is None:
            raise FrameError(f"unknown header byte 0x{data[0]:02X}")
        return cls(form, data[1:], seq_id)


def quantize(value: float, spec: QuantSpec) -> int:
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    clamped = min(max(value, spec.lo), spec.hi)
    return round((clamped - spec.lo) / spec.step)


def dequantize(code: int, spec: QuantSpec) -> float:
    if not 0 <= code < 2**spec.bits:
        raise ValueError("code out of range")
    return spec.lo + code * spec.step


def encode_term(term: Term) -> Frame:
    if isinstance(term, DctTerm):
        if not 0 <= term.index < 256:
            raise ValueError("series index must fit one byte")
        payload = struct.pack(
            "<HB5x", quantize(term.amplitude, QUANT["dct.amplitude"]), term.index
        )
        return Frame(FORM_DCT, payload)
    if isinstance(term, MpAtom):
        payload = struct.pack(
            "<HHBBBx",
            quantize(term.amplitude, QUANT["mp.amplitude"]),
            quantize(term.scale, QUANT["mp.scale"]),
            quantize(term.position, QUANT["mp.position"]),
            quantize(term.frequency, QUANT["mp.frequency"]),
            quantize(term.phase, QUANT["mp.phase"]),
        )
        return Frame(FORM_MP, payload)
    if isinstance(term, RbfTerm):
        payload = struct.pack(
            "<HBHHx",
            quantize(term.amplitude, QUANT["rbf.amplitude"]),
            quantize(term.width, QUANT["rbf.width"]),
            quantize(term.center_x, QUANT["rbf.center"]),
            quantize(term.center_y, QUANT["rbf.center"]),
        )
        return Frame(FORM_RBF, payload)
    if isinstance(term, WavePair):
        payload = struct.pack(
            "<HHH2x",
            quantize(term.wavevector, QUANT["wave.wavevector"]),
            quantize(term.cos_amp, QUANT["wave.amp"]),
            quantize(term.sin_amp, QUANT["wave.amp"]),
        )
        return Frame(FORM_WAVE, payload)
    if isinstance(term, SeqRef):
        raise ValueError("sequential references use encode_seq_ref")
    raise TypeError(f"unsupported term type: {type(term).__name__}")


def encode_seq_ref(module_index: int, h: float) -> Frame:
    if not 0 <= module_index < 2**11:  # 11-bit message identifier space
        raise ValueError("module index out of identifier range")
    if not 0 <= h <= STROKE_MM:
        raise ValueError("height out of stroke range")
    payload = struct.pack("<H6x", quantize(h, QUANT["seq.height"]))
    return Frame(FORM_SEQ, payload, seq_id=module_index)


def decode_frame(frame: Frame) -> Term:
    if frame.form not in HEADER_BY_FORM:
        raise FrameError(f"unknown form: {frame.form!r}")
    p = frame.payload
    if frame.form == FORM_DCT:
        a_code, index = struct.unpack("<HB5x", p)
        return DctTerm(index, dequantize(a_code, QUANT["dct.amplitude"]))
    if frame.form == FORM_MP:
        a_c, s_c, p_c, k_c, phi_c = struct.unpack("<HHBBBx", p)
        return MpAtom(
            dequantize(a_c, QUANT["mp.amplitude"]),
            dequantize(s_c, QUANT["mp.scale"]),
            dequantize(p_c, QUANT["mp.position"]),
            dequantize(k_c, QUANT["mp.frequency"]),
            dequantize(phi_c, QUANT["mp.phase"]),
        )
    if frame.form == FORM_RBF:
        a_c, w_c, x_c, y_c = struct.unpack("<HBHHx", p)
        return RbfTerm(
            dequantize(a_c, QUANT["rbf.amplitude"]),
            dequantize(w_c, QUANT["rbf.width"]),
            dequantize(x_c, QUANT["rbf.center"]),
            dequantize(y_c, QUANT["rbf.center"]),
        )
    if frame.form == FORM_WAVE:
        k_c, a_c, b_c = struct.unpack("<HHH2x", p)
        return WavePair(
            dequantize(k_c, QUANT["wave.wavevector"]),
            dequantize(a_c, QUANT["wave.amp"]),
            dequantize(b_c, QUANT["wave.amp"]),
        )
    if frame.seq_id is None:
        raise FrameError("sequential frame lacks its module identifier")
    h_code, = struct.unpack("<H6x", p)
    return SeqRef(frame.seq_id, dequantize(h_code, QUANT["seq.height"]))
