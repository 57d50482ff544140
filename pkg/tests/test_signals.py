import math

import numpy as np
import pytest

from wpaa.config_loader import Settings
from wpaa.signals import (
    AnalyticSignal,
    GridFunction,
    SignalError,
    Weight,
    bump,
    decay,
    extend_by_zero,
    identity_map,
    lift_to_vector,
    sample,
    sign_wave,
    signal_from_dict,
    translate,
    trig,
    v_infinity_check,
    weight_classes,
    weights_equivalent,
    zero_signal,
)


def make_settings() -> Settings:
    return Settings().replace(ladder_levels=6, dominator_levels=5)


def test_sum_of_parts_evaluates_pointwise():
    f = trig() + decay()
    values = f([0.0, math.pi / 2])
    assert values.shape == (2, 1)
    np.testing.assert_allclose(values[:, 0], [1.0, 1.0 + math.exp(-math.pi / 2)])


def test_scaling_and_negation():
    f = 3.0 * trig()
    assert f.value_at(math.pi / 2)[0] == pytest.approx(3.0)
    assert (-f).value_at(math.pi / 2)[0] == pytest.approx(-3.0)
    assert (f - f).value_at(1.0)[0] == pytest.approx(0.0)


def test_zero_signal_and_zero_scale_are_zero():
    assert zero_signal().is_zero()
    assert (0.0 * trig()).is_zero()
    assert not trig().is_zero()


def test_bound_is_infinite_for_identity_map():
    assert trig().bound() == pytest.approx(1.0)
    assert math.isinf(identity_map().bound())


def test_adding_signals_of_different_dimension_fails():
    vector = lift_to_vector(trig(), [1.0, 2.0])
    assert vector.dim == 2
    with pytest.raises(SignalError, match="维数"):
        trig() + vector


def test_translate_and_extend_by_zero():
    f = decay()
    assert translate(f, 2.0).value_at(2.0)[0] == pytest.approx(1.0)
    extended = extend_by_zero(f)
    assert extended.value_at(-1.0)[0] == 0.0
    assert extended.value_at(1.0)[0] == pytest.approx(math.exp(-1.0))


def test_sign_wave_crossings_lie_on_jumps():
    f = sign_wave()
    points = f.breakpoints_between(0.0, 5.0)
    assert points.size > 0
    theta = math.sqrt(2.0)
    np.testing.assert_allclose(np.cos(2.0 * np.pi * theta * points), 0.0, atol=1e-9)


def test_bump_vanishes_outside_support():
    f = bump()
    assert f.value_at(0.0)[0] == pytest.approx(1.0)
    assert f.value_at(1.5)[0] == 0.0
    assert f.breakpoints() == (-1.0, 1.0)


def test_signal_from_dict_accepts_part_list():
    f = signal_from_dict([{"kind": "trig", "frequency": 2.0}, {"kind": "constant", "value": 0.5}])
    assert f.value_at(math.pi / 4)[0] == pytest.approx(1.5)


def test_signal_from_dict_rejects_unknown_kind():
    with pytest.raises(SignalError, match="未知的部件类型"):
        signal_from_dict({"parts": [{"kind": "wavelet"}]})


def test_grid_function_requires_two_finite_samples():
    with pytest.raises(SignalError):
        GridFunction(0.0, 0.1, np.array([1.0]))
    with pytest.raises(SignalError, match="非有限"):
        GridFunction(0.0, 0.1, np.array([1.0, np.nan]))


def test_sample_and_window():
    grid = sample(trig(), (0.0, 1.0), 0.25)
    assert grid.values.shape == (5, 1)
    np.testing.assert_allclose(grid.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    part = grid.window(0.25, 0.75)
    assert part.origin == pytest.approx(0.25)
    assert part.values.shape[0] == 3


def test_grid_function_csv_roundtrip(tmp_path):
    grid = sample(trig(), (-1.0, 1.0), 0.125)
    path = tmp_path / "grid.csv"
    grid.to_csv(path)
    loaded = GridFunction.from_csv(path)
    assert loaded.step == pytest.approx(grid.step)
    np.testing.assert_array_equal(loaded.values, grid.values)


def test_grid_function_as_signal_interpolates_table():
    grid = GridFunction(0.0, 1.0, np.array([0.0, 2.0, 4.0]))
    signal = grid.as_signal()
    assert isinstance(signal, AnalyticSignal)
    assert signal.value_at(0.5)[0] == pytest.approx(1.0)


def test_polynomial_weight_mass():
    rho = Weight.polynomial()
    T = 3.0
    assert rho.mass(T) == pytest.approx(2.0 * T + 2.0 * T ** 3 / 3.0)
    assert rho.one_sided_mass(T) == pytest.approx(T + T ** 3 / 3.0)


def test_gaussian_log_value_does_not_overflow():
    rho = Weight.gaussian()
    assert float(rho.log_value(100.0)) == pytest.approx(1e4)


def test_weight_from_dict_shorthands():
    assert Weight.from_dict("1").kind == "constant"
    assert Weight.from_dict("1+t^2").kind == "polynomial"
    assert Weight.from_dict("e^t^2").kind == "gaussian"
    assert Weight.from_dict(2).params == (2.0,)
    with pytest.raises(SignalError, match="简写"):
        Weight.from_dict("t^3")


def test_polynomial_weight_must_be_positive():
    with pytest.raises(SignalError, match="不为正"):
        Weight.polynomial((0.0, 1.0))


def test_weight_classes_polynomial_and_constant():
    settings = make_settings()
    poly = weight_classes(Weight.polynomial(), settings)
    assert poly.in_U and poly.in_U_infinity
    assert not poly.bounded
    assert poly.in_U_T

    const = weight_classes(Weight.constant(), settings)
    assert const.bounded and const.in_U_b


def test_gaussian_weight_is_not_translation_invariant():
    report = weight_classes(Weight.gaussian(), make_settings())
    assert not report.in_U_T
    assert report.to_dict()["inf_condition"] == "unchecked"


def test_weights_equivalent():
    settings = make_settings()
    assert weights_equivalent(Weight.constant(1.0), Weight.constant(2.0), settings)
    assert not weights_equivalent(Weight.polynomial(), Weight.constant(), settings)


def test_v_infinity_check_for_polynomial_pair():
    result = v_infinity_check(Weight.polynomial(), Weight.polynomial(), settings=make_settings())
    assert result["mass_ratio_bounded"]
    assert result["in_V_infinity"]
