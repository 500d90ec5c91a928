"""Built-in reference shapes and grid/vector helpers."""

import numpy as np
import pytest

from pincast import approx
from pincast.approx import (
    ApproxPlan,
    DctTerm,
    SeqRef,
    ShapeGrid,
    ShapeVector,
    WavePair,
    builtin_shape,
    flatten,
    order_terms,
    relative_error,
    scale_to_stroke,
    unflatten,
)


def test_identity_is_the_4x4_identity_matrix():
    grid = builtin_shape("identity")
    assert np.array_equal(grid.heights, np.eye(4))


def test_plane_is_x_plus_2y():
    grid = builtin_shape("plane")
    for y in range(4):
        for x in range(4):
            assert grid.heights[y, x] == x + 2 * y


def test_parabola_polynomial_values():
    grid = builtin_shape("parabola")
    for y in range(4):
        for x in range(4):
            assert grid.heights[y, x] == 2 * x**2 + 3 * y**2 - 3 * x * y


def test_checkers_alternates():
    grid = builtin_shape("checkers")
    for y in range(4):
        for x in range(4):
            assert grid.heights[y, x] == (x + y) % 2


def test_peak_single_pin_flattens_to_index_9():
    grid = builtin_shape("peak")
    assert grid.heights.sum() == 1.0
    vec = flatten(grid)
    assert vec.values[9] == 1.0
    assert np.count_nonzero(vec.values) == 1


def test_random_reproducible_and_in_unit_range():
    a = builtin_shape("random", seed=1)
    b = builtin_shape("random", seed=1)
    c = builtin_shape("random", seed=2)
    assert np.array_equal(a.heights, b.heights)
    assert not np.array_equal(a.heights, c.heights)
    assert np.all((a.heights >= 0) & (a.heights < 1))


def test_unknown_shape_rejected():
    with pytest.raises(ValueError):
        builtin_shape("cone")


def test_scale_to_stroke_affine_endpoints():
    grid = builtin_shape("plane")
    scaled = scale_to_stroke(grid, 70.0)
    assert scaled.heights.min() == 0.0
    assert scaled.heights.max() == 70.0
    # affine: ratios of differences preserved
    flat = grid.heights.ravel()
    sflat = scaled.heights.ravel()
    assert np.allclose(sflat, (flat - flat.min()) / np.ptp(flat) * 70.0)


def test_scale_to_stroke_constant_sits_mid_stroke():
    grid = ShapeGrid(2, 2, np.full((2, 2), 3.3))
    scaled = scale_to_stroke(grid, 70.0)
    assert np.all(scaled.heights == 35.0)


def test_scale_to_stroke_rejects_bad_stroke():
    with pytest.raises(ValueError):
        scale_to_stroke(builtin_shape("plane"), 0.0)


def test_flatten_row_major_and_round_trip():
    grid = ShapeGrid(2, 3, np.arange(6.0).reshape(2, 3))
    vec = flatten(grid)
    assert list(vec.values) == [0, 1, 2, 3, 4, 5]  # n = y*cols + x
    back = unflatten(vec, 2, 3)
    assert np.array_equal(back.heights, grid.heights)


def test_unflatten_dimension_mismatch():
    with pytest.raises(ValueError):
        unflatten(ShapeVector(6, np.zeros(6)), 2, 2)


def test_grid_and_vector_validation():
    with pytest.raises(ValueError):
        ShapeGrid(2, 2, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ShapeVector(4, np.array([1.0, np.nan, 0.0, 0.0]))


def test_relative_error_basic_and_degenerate():
    target = ShapeVector(2, np.array([1.0, 1.0]))
    initial = ShapeVector(2, np.array([0.0, 0.0]))
    halfway = ShapeVector(2, np.array([0.5, 0.5]))
    assert relative_error(halfway, target, initial) == pytest.approx(0.5)
    assert relative_error(target, target, target) == 0.0
    with pytest.raises(ValueError):
        relative_error(halfway, target, target)


def test_order_terms_descending_amplitude_stable_ties():
    plan = ApproxPlan(approx.FORM_DCT, [
        DctTerm(0, 0.5), DctTerm(1, -2.0), DctTerm(2, 0.5), DctTerm(3, 1.0)])
    ordered = order_terms(plan)
    assert [t.index for t in ordered.terms] == [1, 3, 0, 2]
    equal = ApproxPlan(approx.FORM_DCT, [DctTerm(i, 1.0) for i in range(4)])
    assert [t.index for t in order_terms(equal).terms] == [0, 1, 2, 3]


def test_order_terms_sequential_by_distance_from_initial():
    plan = ApproxPlan(approx.FORM_SEQ, [
        SeqRef(0, 35.0), SeqRef(1, 70.0), SeqRef(2, 20.0), SeqRef(3, 0.0)])
    ordered = order_terms(plan, h_initial_mm=35.0)
    assert [t.module_index for t in ordered.terms] == [1, 3, 2, 0]


def test_order_terms_wave_passthrough():
    plan = ApproxPlan(approx.FORM_WAVE, [WavePair(0.5, 1.0, 0.0)])
    assert order_terms(plan).terms == plan.terms
