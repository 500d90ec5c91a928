"""Broadcast shape control for pin-array surfaces.

Target shapes are approximated by compact coefficient sets (cosine
series, time-frequency atoms, or Gaussian radial basis functions),
broadcast as quantized 8-byte frames, and each simulated actuation
module computes its own control input from a stored identifier.
"""

from .approx import (
    ApproxPlan,
    DctTerm,
    MpAtom,
    RbfTerm,
    SeqRef,
    ShapeGrid,
    ShapeVector,
    WavePair,
    atom_eval,
    builtin_shape,
    dct_eval,
    dct_forward,
    flatten,
    gaussian_periodized,
    mp_decompose,
    mp_eval,
    order_terms,
    rbf_eval,
    relative_error,
    scale_to_stroke,
    unflatten,
    wave_eval,
)
from .bus import BROADCAST, SEQUENTIAL, BusConfig, BusEvent, Timeline, merge, replay, schedule
from .frames import (
    Frame,
    FrameError,
    QuantSpec,
    QUANT,
    decode_frame,
    dequantize,
    encode_seq_ref,
    encode_term,
    quantize,
)
from .harness import (
    DelayResult,
    ErrorCurve,
    ManipulationResult,
    TrajectoryScript,
    emit_csv,
    run_delay_binary,
    run_delay_wave,
    run_manipulation,
    run_shape_experiment,
    xcorr_delay,
)
from .modules import (
    ModuleId,
    ModuleState,
    MotorParams,
    make_ids_1d,
    make_ids_2d,
    on_frame,
    pid_step,
    reset_target,
    run_robot,
)
from .prng import splitmix64

__version__ = "0.1.0"
