"""Shape representations and the three approximation families.

A target surface is a small grid of actuator heights.  Flattened to a
vector f_0..f_{N-1}, it can be encoded three ways, each compact enough to
broadcast one term per 8-byte frame:

* cosine series:  f_n = a_0 + 2 * sum_t a_t cos(k_t (2 x_n + 1)),
  k_t = pi t / (2 N)
* time-frequency atoms (greedy sparse decomposition over a dictionary of
  periodized-Gaussian envelopes times sinusoids)
* 2-D Gaussian radial basis functions (used for manipulation scripting)

plus a traveling-wave pair and the trivial per-module sequential encoding
used as the comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .prng import splitmix64

STROKE_MM = 70.0
MID_LEVEL = 0.5

# Narrow-scale atom envelopes leak ~exp(-pi/s_min^2) onto neighbouring
# modules, so residuals below this fraction of the initial norm are
# considered converged.
_CONVERGED = 1e-8

# Selection guards: reject candidate atoms whose unit-phase direction has a
# tiny norm on the grid (their amplitudes explode) or whose amplitude falls
# outside the broadcastable range.
_DIR_NORM_MIN = 0.5
_AMP_MAX = 2.0

S_MIN = 0.4


@dataclass
class ShapeGrid:
    """R x C matrix of target actuator heights."""

    rows: int
    cols: int
    heights: np.ndarray

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float)
        if self.heights.shape != (self.rows, self.cols):
            raise ValueError("heights shape does not match rows x cols")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")


@dataclass
class ShapeVector:
    """Flattened shape: module n sits at x_n = n."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n,):
            raise ValueError("values length does not match n")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")


@dataclass
class DctTerm:
    index: int
    amplitude: float


@dataclass
class MpAtom:
    amplitude: float
    scale: float
    position: float
    frequency: float
    phase: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.frequency < 0:
            raise ValueError("frequency must be non-negative")
        self.phase = self.phase % (2 * math.pi)


@dataclass
class RbfTerm:
    amplitude: float
    width: float
    center_x: float
    center_y: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")


@dataclass
class WavePair:
    wavevector: float
    cos_amp: float
    sin_amp: float


@dataclass
class SeqRef:
    module_index: int
    height_mm: float


Term = Union[DctTerm, MpAtom, RbfTerm, WavePair, SeqRef]

FORM_DCT = "DCT"
FORM_MP = "MP"
FORM_RBF = "RBF"
FORM_WAVE = "WAVE"
FORM_SEQ = "SEQUENTIAL"


@dataclass
class ApproxPlan:
    form: str
    terms: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Cosine series


def dct_forward(shape: ShapeVector) -> list[DctTerm]:
    """All N series terms; evaluating all of them reconstructs the shape."""
    f = shape.values
    n = shape.n
    if n < 1:
        raise ValueError("shape must be non-empty")
    idx = 2 * np.arange(n) + 1
    terms = [DctTerm(0, float(f.mean()))]
    for t in range(1, n):
        k_t = math.pi * t / (2 * n)
        terms.append(DctTerm(t, float(f @ np.cos(k_t * idx)) / n))
    return terms


def dct_eval(terms: Sequence[DctTerm], x: float, n_total: int) -> float:
    """Partial series sum at module position x."""
    if not 0 <= x < n_total:
        raise ValueError("x out of range")
    total = 0.0
    for term in terms:
        if term.index >= n_total:
            raise ValueError("term index out of range")
        k_t = math.pi * term.index / (2 * n_total)
        if term.index == 0:
            total += term.amplitude
        else:
            total += 2 * term.amplitude * math.cos(k_t * (2 * x + 1))
    return total


# ---------------------------------------------------------------------------
# Periodized Gaussian and time-frequency atoms

_TRUNC = math.sqrt(math.log(1e12) / math.pi)


def gaussian_periodized(s: float, x: float, n: int) -> float:
    """sum_j exp(-pi ((x - j n)/s)^2), truncated once the tail is < 1e-12.

    x is wrapped into [0, n) first so periodicity holds bit-exactly.
    """
    if s <= 0:
        raise ValueError("scale must be positive")
    x = x % n
    j_max = math.ceil(s * _TRUNC / n) + 1
    total = 0.0
    for j in range(-j_max, j_max + 1):
        total += math.exp(-math.pi * ((x - j * n) / s) ** 2)
    return total


def _gauss_vec(s: float, x: np.ndarray, n: int) -> np.ndarray:
    x = np.mod(x, n)
    j_max = math.ceil(s * _TRUNC / n) + 1
    js = np.arange(-j_max, j_max + 1)
    return np.exp(-math.pi * ((x[:, None] - js[None, :] * n) / s) ** 2).sum(axis=1)


def atom_eval(atom: MpAtom, x: float, n_total: int) -> float:
    g = gaussian_periodized(atom.scale, x - atom.position, n_total)
    return atom.amplitude * g * math.cos(
        2 * math.pi * atom.frequency * x / n_total + atom.phase
    )


def mp_eval(atoms: Sequence[MpAtom], x: float, n_total: int) -> float:
    return sum(atom_eval(atom, x, n_total) for atom in atoms)


def _quadrature_pair(s: float, p: float, k: float, n: int):
    """Even/odd envelope-sinusoid pair spanning all phases of one atom."""
    x = np.arange(n, dtype=float)
    g = _gauss_vec(s, x - p, n)
    ang = 2 * math.pi * k * x / n
    return g * np.cos(ang), g * np.sin(ang)


def _project(r: np.ndarray, cos_v: np.ndarray, sin_v: np.ndarray):
    """Least-squares coefficients of r on the pair and the captured energy.

    Returns (capture, alpha, beta) with capture = ||projection||^2; falls
    back to the single-vector projection when the pair is near-degenerate
    (narrow envelopes make the two vectors almost parallel and the 2x2
    solve would amplify roundoff past the true energy).
    """
    cc = float(cos_v @ cos_v)
    ss = float(sin_v @ sin_v)
    cs = float(cos_v @ sin_v)
    rc = float(r @ cos_v)
    rs = float(r @ sin_v)
    if cc < 1e-250:
        return -1.0, 0.0, 0.0
    det = cc * ss - cs * cs
    if ss <= 1e-8 * cc or det <= 1e-8 * cc * ss:
        return rc * rc / cc, rc / cc, 0.0
    alpha = (ss * rc - cs * rs) / det
    beta = (cc * rs - cs * rc) / det
    cap = alpha * rc + beta * rs
    if cap > float(r @ r) * (1 + 1e-9):
        return rc * rc / cc, rc / cc, 0.0
    return cap, alpha, beta


def _capture(r: np.ndarray, s: float, p: float, k: float, n: int):
    """Guarded projection: candidates with unrepresentable amplitudes or
    vanishing grid norm are ranked out with a negative capture."""
    cos_v, sin_v = _quadrature_pair(s, p, k, n)
    cap, alpha, beta = _project(r, cos_v, sin_v)
    a = math.hypot(alpha, beta)
    if a > _AMP_MAX:
        return -1.0, alpha, beta
    if a > 0:
        cphi, sphi = alpha / a, -beta / a
        direction = cphi * cos_v - sphi * sin_v
        if float(direction @ direction) < _DIR_NORM_MIN**2:
            return -1.0, alpha, beta
    return cap, alpha, beta


def _dict_scales(n: int) -> list[float]:
    scales = []
    s = 1.0
    while s <= n:
        scales.append(s)
        s *= 2
    return scales


def _match(r: np.ndarray, n: int):
    """Scan the discrete dictionary for the best-capturing candidate."""
    best_cap = -math.inf
    best = None
    for s in _dict_scales(n):
        for p in range(n):
            for k in range(n // 2 + 1):
                cap, _, _ = _capture(r, s, float(p), float(k), n)
                if cap > best_cap:
                    best_cap = cap
                    best = (s, float(p), float(k))
    return best


def _clamp_params(s: float, p: float, k: float, n: int):
    s = min(max(s, S_MIN), 2.0 * n)
    return s, p % n, min(max(k, 0.0), n / 2.0)


def _pursue(r: np.ndarray, s: float, p: float, k: float, n: int):
    """Derivative-free local refinement of (s, p, k); phase and amplitude
    stay analytic.  Pattern search with shrinking steps and one restart;
    the capture never decreases."""
    cur, _, _ = _capture(r, s, p, k, n)
    best = (cur, s, p, k)
    init_steps = (max(s * 0.5, 0.25), 0.5, 0.5)
    for _ in range(2):
        steps = list(init_steps)
        cur, s, p, k = best
        for _ in range(300):
            improved = False
            for axis in range(3):
                while True:
                    cands = []
                    for sign in (1.0, -1.0):
                        move = [0.0, 0.0, 0.0]
                        move[axis] = sign * steps[axis]
                        ns, np_, nk = _clamp_params(s + move[0], p + move[1], k + move[2], n)
                        cap, _, _ = _capture(r, ns, np_, nk, n)
                        cands.append((cap, ns, np_, nk))
                    cap, ns, np_, nk = max(cands, key=lambda c: c[0])
                    if cap > cur * (1 + 1e-12) + 1e-300:
                        cur, s, p, k = cap, ns, np_, nk
                        improved = True
                    else:
                        break
            if not improved:
                for ds in (-steps[0], 0.0, steps[0]):
                    for dp in (-steps[1], 0.0, steps[1]):
                        for dk in (-steps[2], 0.0, steps[2]):
                            if ds == dp == dk == 0.0:
                                continue
                            ns, np_, nk = _clamp_params(s + ds, p + dp, k + dk, n)
                            cap, _, _ = _capture(r, ns, np_, nk, n)
                            if cap > cur * (1 + 1e-12):
                                cur, s, p, k = cap, ns, np_, nk
                                improved = True
            if not improved:
                steps = [st * 0.5 for st in steps]
                if max(steps) < 1e-9:
                    break
        if cur > best[0]:
            best = (cur, s, p, k)
    return best[1], best[2], best[3]


def _best_bin(r: np.ndarray, n: int):
    """Best flat-envelope integer-frequency atom (the orthogonal family)."""
    s = 2.0 * n
    best = (-math.inf, None)
    for k in range(n // 2 + 1):
        cos_v, sin_v = _quadrature_pair(s, 0.0, float(k), n)
        cap, alpha, beta = _project(r, cos_v, sin_v)
        if cap > best[0]:
            best = (cap, (float(k), alpha, beta))
    return best[1]


def mp_decompose(shape: ShapeVector, max_terms: int, tolerance: float) -> list[MpAtom]:
    """Greedy sparse decomposition: match against the dictionary, refine
    locally, subtract, repeat.

    The greedy stage leaves a residual that decays too slowly for exact
    late-term reconstruction (successive atoms keep overlapping), so the
    last N//2 + 1 slots are spent on the mutually orthogonal maximal-scale
    integer-frequency atoms, which finish off any remaining residual.
    The residual norm is non-increasing at every step under both stages.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    n = shape.n
    f = shape.values.astype(float)
    r = f.copy()
    init = float(np.linalg.norm(r))
    n_bins = n // 2 + 1
    greedy_slots = max_terms - n_bins if max_terms > n_bins else max_terms
    atoms: list[MpAtom] = []
    while len(atoms) < max_terms:
        if float(np.linalg.norm(r)) <= max(tolerance, _CONVERGED) * init:
            break
        if len(atoms) < greedy_slots:
            found = _match(r, n)
            if found is None:
                break
            s, p, k = _pursue(r, *found, n)
            _, alpha, beta = _capture(r, s, p, k, n)
        else:
            k, alpha, beta = _best_bin(r, n)
            s, p = 2.0 * n, 0.0
        cos_v, sin_v = _quadrature_pair(s, p, k, n)
        r = r - alpha * cos_v - beta * sin_v
        amplitude = math.hypot(alpha, beta)
        phase = math.atan2(-beta, alpha) % (2 * math.pi)
        atoms.append(MpAtom(amplitude, s, p, k, phase))
    return atoms


# ---------------------------------------------------------------------------
# Radial basis functions


def rbf_eval(terms: Sequence[RbfTerm], x: float, y: float) -> float:
    total = 0.0
    for term in terms:
        d2 = (x - term.center_x) ** 2 + (y - term.center_y) ** 2
        total += term.amplitude * math.exp(-d2 / term.width**2)
    return total


def wave_eval(pair: WavePair, x: float) -> float:
    return pair.cos_amp * math.cos(pair.wavevector * x - math.pi / 2) + (
        pair.sin_amp * math.cos(pair.wavevector * x)
    )


# ---------------------------------------------------------------------------
# Built-in shapes and helpers

SHAPE_NAMES = ("identity", "plane", "parabola", "checkers", "peak", "random")


def builtin_shape(name: str, seed: int = 1) -> ShapeGrid:
    """The six 4x4 reference shapes; coordinates x, y in {0..3}."""
    x, y = np.meshgrid(np.arange(4.0), np.arange(4.0))
    if name == "identity":
        z = np.eye(4)
    elif name == "plane":
        z = x + 2 * y
    elif name == "parabola":
        z = 2 * x**2 + 3 * y**2 - 3 * x * y
    elif name == "checkers":
        z = (x + y) % 2
    elif name == "peak":
        z = np.zeros((4, 4))
        z[2, 1] = 1.0  # (x=1, y=2)
    elif name == "random":
        z = np.array(splitmix64(seed, 16)).reshape(4, 4)
    else:
        raise ValueError(f"unknown shape name: {name!r}")
    return ShapeGrid(4, 4, z)


def scale_to_stroke(grid: ShapeGrid, stroke_mm: float) -> ShapeGrid:
    """Affine map sending min -> 0 and max -> stroke; flat grids sit at
    mid-stroke."""
    if stroke_mm <= 0:
        raise ValueError("stroke must be positive")
    lo = float(grid.heights.min())
    hi = float(grid.heights.max())
    if hi == lo:
        z = np.full_like(grid.heights, stroke_mm / 2)
    else:
        z = (grid.heights - lo) / (hi - lo) * stroke_mm
    return ShapeGrid(grid.rows, grid.cols, z)


def flatten(grid: ShapeGrid) -> ShapeVector:
    """Row-major: module n = y * cols + x."""
    return ShapeVector(grid.rows * grid.cols, grid.heights.ravel())


def unflatten(shape: ShapeVector, rows: int, cols: int) -> ShapeGrid:
    if rows * cols != shape.n:
        raise ValueError("rows * cols must equal n")
    return ShapeGrid(rows, cols, shape.values.reshape(rows, cols))


def relative_error(current: ShapeVector, target: ShapeVector,
                   initial: ShapeVector) -> float:
    if not (current.n == target.n == initial.n):
        raise ValueError("length mismatch")
    num = float(np.linalg.norm(current.values - target.values))
    den = float(np.linalg.norm(initial.values - target.values))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise ValueError("degenerate reference: initial equals target")
    return num / den


def order_terms(plan: ApproxPlan, h_initial_mm: float = STROKE_MM / 2) -> ApproxPlan:
    """Sort descending by |amplitude| (sequential: |h - initial|); stable."""
    if plan.form == FORM_WAVE:
        return ApproxPlan(plan.form, list(plan.terms))
    if plan.form == FORM_SEQ:
        key = lambda t: -abs(t.height_mm - h_initial_mm)
    else:
        key = lambda t: -abs(t.amplitude)
    return ApproxPlan(plan.form, sorted(plan.terms, key=key))
