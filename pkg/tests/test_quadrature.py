import math

import numpy as np
import pytest

from wpaa.quadrature import (
    CumulativeIntegral,
    TailBoundError,
    graded_breaks,
    grading_levels,
    grid_convolution,
    integrate_panels,
    product_weights,
    uniform_breaks,
    zoned_breaks,
)


def test_integrate_panels_sin_over_half_period():
    value = integrate_panels(np.sin, uniform_breaks(0.0, math.pi, 0.5))
    assert value == pytest.approx(2.0, abs=1e-13)


def test_graded_breaks_resolve_inverse_sqrt_singularity():
    breaks = graded_breaks(0.0, 1.0, 0.25, exponent=-0.5)
    value = integrate_panels(lambda x: x ** -0.5, breaks)
    assert value == pytest.approx(2.0, abs=1e-10)
    assert breaks[0] == 0.0 and np.all(np.diff(breaks) > 0)


def test_graded_breaks_toward_right_mirrors_left():
    left = graded_breaks(0.0, 1.0, 0.5, exponent=-0.5, toward="left")
    right = graded_breaks(0.0, 1.0, 0.5, exponent=-0.5, toward="right")
    np.testing.assert_allclose(np.sort(1.0 - right), left, atol=1e-14)


def test_grading_levels_rejects_non_integrable_exponent():
    with pytest.raises(ValueError, match="不可积"):
        grading_levels(-1.0)


def test_zoned_breaks_insert_anchors_and_stay_sorted():
    breaks = zoned_breaks(-10.0, 10.0, -1.0, 1.0, 0.25, 2.0, anchors=[0.3, 5.5, 42.0])
    assert 0.3 in breaks and 5.5 in breaks
    assert 42.0 not in breaks
    assert breaks[0] == -10.0 and breaks[-1] == 10.0
    assert np.all(np.diff(breaks) > 0)
    assert np.max(np.diff(breaks[(breaks >= -1.0) & (breaks <= 1.0)])) <= 0.25 + 1e-12


def test_cumulative_integral_matches_antiderivative():
    table = CumulativeIntegral(np.cos, uniform_breaks(-3.0, 7.0, 0.5))
    x = np.array([-3.0, -1.234, 0.0, 2.5, 6.99])
    np.testing.assert_allclose(table(x), np.sin(x) - np.sin(-3.0), atol=1e-13)
    assert float(table.between(0.0, math.pi / 2)) == pytest.approx(1.0, abs=1e-13)


def test_cumulative_integral_rejects_queries_outside_table():
    table = CumulativeIntegral(np.cos, uniform_breaks(0.0, 1.0, 0.5))
    with pytest.raises(ValueError, match="超出"):
        table(1.5)


def test_cumulative_integral_requires_increasing_breaks():
    with pytest.raises(ValueError):
        CumulativeIntegral(np.cos, np.array([0.0, 0.0, 1.0]))


def test_product_weights_of_unit_kernel_are_hat_areas():
    step = 0.5
    weights = product_weights(lambda tau: np.ones_like(tau), 0, 4, step)
    assert weights.shape == (5, 1)
    np.testing.assert_allclose(weights[:, 0], [0.25, 0.5, 0.5, 0.5, 0.25], atol=1e-14)


def test_product_weights_singular_cell_integrates_power_kernel():
    step = 0.1
    weights = product_weights(lambda tau: tau ** -0.5, 0, 10, step, singular_exponent=-0.5)
    # 所有帽函数权重之和等于 ∫_0^1 τ^{-1/2} dτ
    assert float(weights.sum()) == pytest.approx(2.0, abs=1e-9)


def test_grid_convolution_identity_and_positive_lag_shift():
    values = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(grid_convolution(np.array([1.0]), values), values)
    shifted = grid_convolution(np.array([1.0]), values, lag_lower=1)
    np.testing.assert_allclose(shifted, [0.0, 1.0, 2.0, 3.0])


def test_grid_convolution_rejects_channel_mismatch():
    with pytest.raises(ValueError, match="通道"):
        grid_convolution(np.ones((3, 2)), np.ones((5, 3)))


def test_tail_bound_error_carries_required_length():
    error = TailBoundError("截断不足", required_length=128.0)
    assert error.required_length == 128.0
    assert "截断不足" in str(error)
