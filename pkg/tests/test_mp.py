"""Greedy pulse decomposition and its periodized-Gaussian atoms.

Oracles: brute-force image sums for the periodized kernel, the closed-form
atom expression written out directly, and sequential re-subtraction of
returned atoms to check the residual story independently.
"""

import math

import numpy as np
import pytest

from pincast.approx import (
    MpAtom,
    ShapeVector,
    atom_eval,
    builtin_shape,
    flatten,
    gaussian_periodized,
    mp_decompose,
    mp_eval,
    scale_to_stroke,
)


def stroke_normalized(name):
    return flatten(scale_to_stroke(builtin_shape(name), 70.0)).values / 70.0

N = 16


def oracle_gauss(x, s, n, j_range=40):
    return sum(math.exp(-math.pi * ((x - j * n) / s) ** 2)
               for j in range(-j_range, j_range + 1))


def residuals_by_resubtraction(values, atoms):
    """Re-subtract each atom's samples from the signal, independently."""
    resid = np.asarray(values, dtype=float).copy()
    norms = [float(np.linalg.norm(resid))]
    n = len(resid)
    for atom in atoms:
        for x in range(n):
            resid[x] -= atom_eval(atom, x, n)
        norms.append(float(np.linalg.norm(resid)))
    return norms


# ---------------------------------------------------------------- kernel ---

def test_narrow_kernel_peak_is_one():
    assert gaussian_periodized(1.0, 0.0, N) == pytest.approx(1.0, abs=1e-12)


def test_kernel_periodic():
    for x in (0.0, 1.7, 8.0, 15.2):
        for s in (0.7, 4.0, 32.0):
            base = gaussian_periodized(s, x, N)
            assert gaussian_periodized(s, x + N, N) == pytest.approx(base, abs=1e-12)
            assert gaussian_periodized(s, x - 3 * N, N) == pytest.approx(base, abs=1e-12)
    # Integer offsets shift losslessly, so there the match is bit-exact.
    for x in (0, 3, 8, 15):
        for s in (0.7, 4.0, 32.0):
            assert gaussian_periodized(s, x, N) == gaussian_periodized(s, x + N, N)


def test_wide_kernel_matches_brute_force_image_sum():
    # s = N means neighbouring images overlap strongly; truncation must not bite.
    got = gaussian_periodized(16.0, 8.0, N)
    assert got == pytest.approx(oracle_gauss(8.0, 16.0, N), rel=1e-12)
    got = gaussian_periodized(32.0, 3.0, N)
    assert got == pytest.approx(oracle_gauss(3.0, 32.0, N), rel=1e-12)


def test_kernel_symmetry():
    for x in (1.0, 5.5):
        assert gaussian_periodized(4.0, x, N) == pytest.approx(
            gaussian_periodized(4.0, -x, N), abs=1e-14)


def test_kernel_rejects_nonpositive_scale():
    with pytest.raises(ValueError):
        gaussian_periodized(0.0, 0.0, N)
    with pytest.raises(ValueError):
        gaussian_periodized(-1.0, 0.0, N)


# ------------------------------------------------------------------ atoms ---

def test_atom_eval_matches_closed_form():
    atom = MpAtom(amplitude=1.0, scale=4.0, position=8.0, frequency=2.0,
                  phase=math.pi / 3)
    x = 5
    want = oracle_gauss(x - 8.0, 4.0, N) * math.cos(2 * math.pi * 2 * x / N + math.pi / 3)
    assert atom_eval(atom, x, N) == pytest.approx(want, rel=1e-12)


def test_atom_invariants_enforced():
    with pytest.raises(ValueError):
        MpAtom(amplitude=1.0, scale=0.0, position=0.0, frequency=0.0, phase=0.0)
    with pytest.raises(ValueError):
        MpAtom(amplitude=1.0, scale=1.0, position=0.0, frequency=-1.0, phase=0.0)
    # Phase is wrapped into [0, 2*pi) rather than rejected.
    atom = MpAtom(amplitude=1.0, scale=1.0, position=0.0, frequency=0.0,
                  phase=7.0)
    assert 0.0 <= atom.phase < 2 * math.pi
    assert atom.phase == pytest.approx(7.0 - 2 * math.pi, abs=1e-12)


def test_mp_eval_sums_atoms():
    atoms = [
        MpAtom(amplitude=0.5, scale=2.0, position=3.0, frequency=1.0, phase=0.2),
        MpAtom(amplitude=-0.3, scale=8.0, position=10.0, frequency=0.0, phase=0.0),
    ]
    for x in range(N):
        want = sum(atom_eval(a, x, N) for a in atoms)
        assert mp_eval(atoms, x, N) == pytest.approx(want, abs=1e-14)


# ----------------------------------------------------------- decomposition ---

def test_recovers_single_dictionary_atom():
    truth = MpAtom(amplitude=1.3, scale=4.0, position=8.0, frequency=2.0, phase=0.7)
    values = np.array([atom_eval(truth, x, N) for x in range(N)])
    atoms = mp_decompose(ShapeVector(N, values), max_terms=1, tolerance=0.0)
    assert len(atoms) == 1
    resid = values - np.array([atom_eval(atoms[0], x, N) for x in range(N)])
    assert np.linalg.norm(resid) < 1e-9 * np.linalg.norm(values)


def test_single_peak_captured_by_one_atom():
    values = stroke_normalized("peak")
    atoms = mp_decompose(ShapeVector(N, values), max_terms=1, tolerance=0.0)
    norms = residuals_by_resubtraction(values, atoms)
    assert norms[-1] < 1e-6 * norms[0]


def test_parabola_under_twenty_percent_within_six_terms():
    values = stroke_normalized("parabola")
    atoms = mp_decompose(ShapeVector(N, values), max_terms=6, tolerance=0.0)
    norms = residuals_by_resubtraction(values, atoms)
    assert min(norms[1:]) <= 0.20 * norms[0]


@pytest.mark.parametrize("name", ["identity", "plane", "parabola", "checkers",
                                  "peak", "random"])
def test_residual_never_increases(name):
    values = stroke_normalized(name)
    atoms = mp_decompose(ShapeVector(N, values), max_terms=16, tolerance=0.0)
    norms = residuals_by_resubtraction(values, atoms)
    for before, after in zip(norms, norms[1:]):
        assert after <= before * (1 + 1e-9)


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_residual_never_increases_random_signals(seed):
    values = np.random.default_rng(seed).uniform(-1, 1, N)
    atoms = mp_decompose(ShapeVector(N, values), max_terms=16, tolerance=0.0)
    norms = residuals_by_resubtraction(values, atoms)
    for before, after in zip(norms, norms[1:]):
        assert after <= before * (1 + 1e-9)


def test_atom_field_invariants_on_output():
    values = np.random.default_rng(21).uniform(-1, 1, N)
    atoms = mp_decompose(ShapeVector(N, values), max_terms=16, tolerance=0.0)
    for a in atoms:
        assert abs(a.amplitude) <= 2.0
        assert a.scale > 0.0
        assert 0.0 <= a.position < N
        assert a.frequency >= 0.0
        assert 0.0 <= a.phase < 2 * math.pi


def test_tolerance_stops_early():
    truth = MpAtom(amplitude=1.0, scale=4.0, position=8.0, frequency=2.0, phase=0.7)
    values = np.array([atom_eval(truth, x, N) for x in range(N)])
    atoms = mp_decompose(ShapeVector(N, values), max_terms=16, tolerance=1e-3)
    assert len(atoms) < 16


def test_max_terms_caps_output():
    values = np.random.default_rng(22).uniform(-1, 1, N)
    atoms = mp_decompose(ShapeVector(N, values), max_terms=3, tolerance=0.0)
    assert len(atoms) <= 3


def test_invalid_arguments_rejected():
    values = np.zeros(N)
    with pytest.raises(ValueError):
        mp_decompose(ShapeVector(N, values), max_terms=0, tolerance=0.0)
    with pytest.raises(ValueError):
        mp_decompose(ShapeVector(N, values), max_terms=4, tolerance=-0.1)


def test_determinism():
    values = np.random.default_rng(23).uniform(-1, 1, N)
    a = mp_decompose(ShapeVector(N, values), max_terms=8, tolerance=0.0)
    b = mp_decompose(ShapeVector(N, values.copy()), max_terms=8, tolerance=0.0)
    assert [(t.amplitude, t.scale, t.position, t.frequency, t.phase) for t in a] == \
           [(t.amplitude, t.scale, t.position, t.frequency, t.phase) for t in b]
