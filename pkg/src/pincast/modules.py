"""One actuation module: frame decoding into a local control input, plus
the discrete position loop.

Each module stores only its identifier(s).  On receiving a coefficient
frame it evaluates the term at its own coordinate and accumulates the
result into its control input ``target_f`` (stroke fraction); wave and
sequential frames replace the input instead.  A PID loop with motor
speed saturation and stroke limits drives the shaft toward
``target_f * stroke`` every ``pid_period_ms``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import approx, frames
from .approx import DctTerm, MpAtom, RbfTerm, SeqRef, WavePair
from .bus import Timeline
from .frames import Frame


@dataclass
class ModuleId:
    n: int
    x: float
    y: float = 0.0


def make_ids_1d(n: int) -> list[ModuleId]:
    return [ModuleId(i, float(i)) for i in range(n)]


def make_ids_2d(rows: int, cols: int) -> list[ModuleId]:
    """x = n mod cols, y = n div cols (row-major, matching flatten)."""
    return [ModuleId(i, float(i % cols), float(i // cols)) for i in range(rows * cols)]


@dataclass
class MotorParams:
    max_speed: float = 125.0  # mm/s
    stroke: float = 70.0  # mm
    pid_period_ms: int = 16
    kp: float = 20.0  # 1/s
    ki: float = 0.0
    kd: float = 0.0
    noise_sigma_mm: float = 0.0  # measurement noise on reported positions

    def __post_init__(self):
        if self.max_speed <= 0 or self.stroke <= 0 or self.pid_period_ms <= 0:
            raise ValueError("motor parameters must be positive")


@dataclass
class ModuleState:
    id: ModuleId
    target_f: float = 0.0
    position: float = 0.0
    integrator: float = 0.0
    prev_error: float = 0.0
    trace: list = field(default_factory=list)  # (t_ms, target_f, position)


def on_frame(state: ModuleState, frame: Frame, n_total: int) -> ModuleState:
    """Apply one received frame to this module's control input."""
    term = frames.decode_frame(frame)
    if isinstance(term, DctTerm):
        state.target_f += approx.dct_eval([term], state.id.x, n_total)
    elif isinstance(term, MpAtom):
        state.target_f += approx.atom_eval(term, state.id.x, n_total)
    elif isinstance(term, RbfTerm):
        state.target_f += approx.rbf_eval([term], state.id.x, state.id.y)
    elif isinstance(term, WavePair):
        state.target_f = approx.wave_eval(term, state.id.x)
    elif isinstance(term, SeqRef):
        if term.module_index == state.id.n:
            state.target_f = term.height_mm / frames.STROKE_MM
    if not math.isfinite(state.target_f):
        raise ValueError("control input became non-finite")
    return state


def reset_target(state: ModuleState, level: float) -> ModuleState:
    if not 0.0 <= level <= 1.0:
        raise ValueError("level must be a stroke fraction in [0, 1]")
    state.target_f = level
    return state


def pid_step(state: ModuleState, params: MotorParams) -> ModuleState:
    """One control period: saturated PID velocity drives the shaft.

    The integrator freezes whenever the stroke limits clamp the motion
    (anti-windup)."""
    dt = params.pid_period_ms / 1000.0
    target_mm = state.target_f * params.stroke
    error = target_mm - state.position
    derivative = (error - state.prev_error) / dt
    v = params.kp * error + params.ki * state.integrator + params.kd * derivative
    v = min(max(v, -params.max_speed), params.max_speed)
    raw = state.position + v * dt
    clamped = min(max(raw, 0.0), params.stroke)
    if raw == clamped:
        state.integrator += error * dt
    state.position = clamped
    state.prev_error = error
    return state


def run_robot(
    n: int,
    plan: Timeline,
    params: MotorParams,
    horizon_ms: int,
    ids: list[ModuleId] | None = None,
) -> list[ModuleState]:
    """Co-simulate bus replay and every module's position loop on the
    shared 1 kHz clock; traces are sampled each millisecond after frame
    delivery (so broadcast input changes land at one sample index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if ids is None:
        ids = make_ids_1d(n)
    states = [ModuleState(mid) for mid in ids]
    events = plan.events
    ev = 0
    for t in range(horizon_ms):
        while ev < len(events) and events[ev].arrival_time <= t:
            event = events[ev]
            if event.recipient is None:
                for state in states:
                    on_frame(state, event.frame, n)
            elif 0 <= event.recipient < len(states):
                on_frame(states[event.recipient], event.frame, n)
            ev += 1
        if t % params.pid_period_ms == 0:
            for state in states:
                pid_step(state, params)
        for state in states:
            state.trace.append((t, state.target_f, state.position))
    return states
