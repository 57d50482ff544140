import math

import numpy as np
import pytest

from wpaa.config_loader import Settings
from wpaa.seminorms import (
    EstimatorError,
    LimitEstimate,
    SeminormSpec,
    besicovitch_ergodic,
    besicovitch_upper,
    extrapolate_value,
    extrapolate_vanishing,
    fit_decay_exponent,
    json_safe,
    one_sided_ergodic,
    stepanov_ergodic,
    stepanov_metric,
    stepanov_norm,
    stepanov_window_norms,
    weighted_ergodic,
    weighted_ergodic_limit,
    weyl_distance,
    weyl_ergodic,
)
from wpaa.signals import Weight, bump, constant, decay, sign_wave, trig, zero_signal


def make_settings(**changes) -> Settings:
    return Settings().replace(ladder_levels=8, **changes)


def test_stepanov_norm_of_two_sided_decay():
    assert stepanov_norm(decay(), 1.0) == pytest.approx(2.0 * (1.0 - math.exp(-0.5)), abs=1e-6)
    assert stepanov_norm(decay(), 1.0) == pytest.approx(0.78694, abs=1e-5)


def test_stepanov_norm_of_constant_and_sign_wave():
    assert stepanov_norm(constant(-3.0), 2.0) == pytest.approx(3.0, rel=1e-12)
    assert stepanov_norm(sign_wave(), 3.0) == pytest.approx(1.0, abs=1e-9)


def test_stepanov_metric_over_full_period():
    value = stepanov_metric(trig(), None, 2.0 * math.pi, 2.0)
    assert value == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-9)
    assert stepanov_metric(trig(), trig(), 1.0) == 0.0


def test_stepanov_metric_rejects_bad_parameters():
    with pytest.raises(EstimatorError, match="p"):
        stepanov_metric(trig(), None, 1.0, 0.5)
    with pytest.raises(EstimatorError, match="窗口长度"):
        stepanov_metric(trig(), None, 0.0)


def test_stepanov_norm_is_homogeneous():
    f = trig() + decay()
    base = stepanov_norm(f, 1.0)
    for alpha in (2.0, 10.0):
        assert stepanov_norm(alpha * f, 1.0) == pytest.approx(alpha * base, rel=1e-10)


def test_window_norms_are_monotone_in_p():
    f = trig() + 2.0 * decay()
    starts = np.linspace(-5.0, 5.0, 41)
    low = stepanov_window_norms(f, 1.0, starts)
    high = stepanov_window_norms(f, 3.0, starts)
    assert np.all(low <= high + 1e-12)


def test_stepanov_metric_triangle_inequality():
    f, g, h = trig(), decay(), sign_wave(0.5)
    lhs = stepanov_metric(f, h, 1.0)
    rhs = stepanov_metric(f, g, 1.0) + stepanov_metric(g, h, 1.0)
    assert lhs <= rhs + 1e-9


def test_weyl_distance_of_bump_vanishes():
    estimate = weyl_distance(bump(), None, 1.0, make_settings())
    assert estimate.converged and estimate.vanishing
    assert estimate.extrapolated == 0.0


def test_weyl_distance_of_constant_is_one():
    estimate = weyl_distance(constant(1.0), zero_signal(), 1.0, make_settings())
    assert estimate.extrapolated == pytest.approx(1.0, abs=1e-9)


def test_besicovitch_upper_of_sin_squared_mean():
    # limsup 取梯子末端几级的最大值，短梯子会带上 O(1/T) 的振荡
    settings = Settings()
    estimate = besicovitch_upper(trig(), 2.0, 0.0, settings)
    assert estimate.extrapolated == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)
    spec = SeminormSpec(2.0, "besicovitch")
    assert spec.evaluate(trig(), settings=settings).extrapolated == pytest.approx(
        estimate.extrapolated)


def test_besicovitch_upper_of_decay_vanishes():
    estimate = besicovitch_upper(decay(), 1.0, 0.0, make_settings())
    assert estimate.vanishing and estimate.extrapolated == 0.0


def test_seminorm_spec_validates():
    with pytest.raises(EstimatorError):
        SeminormSpec(p=0.5)
    with pytest.raises(EstimatorError, match="窗口长度"):
        SeminormSpec(1.0, "stepanov", length=-1.0)


def test_weighted_ergodic_closed_forms():
    one = Weight.constant()
    assert weighted_ergodic(constant(2.0), one, one, 7.0) == pytest.approx(2.0, rel=1e-12)
    T = 5.0
    assert weighted_ergodic(decay(), one, one, T) == pytest.approx((1.0 - math.exp(-T)) / T, rel=1e-10)


def test_weighted_ergodic_normalizations():
    rho1, rho2 = Weight.polynomial(), Weight.constant()
    mean = weighted_ergodic(constant(1.0), rho1, rho2, 1.0, Settings())
    halved = weighted_ergodic(constant(1.0), rho1, rho2, 1.0, Settings(ergodic_normalization="halved"))
    assert mean == pytest.approx(0.75, rel=1e-12)
    assert halved == pytest.approx(0.375, rel=1e-12)


def test_weighted_ergodic_rejects_nonpositive_horizon():
    with pytest.raises(EstimatorError, match="T"):
        weighted_ergodic(trig(), Weight.constant(), Weight.constant(), 0.0)


def test_weighted_ergodic_limit_of_decay_vanishes():
    one = Weight.constant()
    estimate = weighted_ergodic_limit(decay(), one, one)
    assert estimate.vanishing
    assert estimate.exponent <= -0.5


def test_weighted_ergodic_limit_of_bounded_signal_with_polynomial_normalizer():
    estimate = weighted_ergodic_limit(trig(), Weight.polynomial(), Weight.constant(), make_settings())
    assert estimate.vanishing


def test_weighted_ergodic_limit_of_constant_stays_at_one():
    one = Weight.constant()
    estimate = weighted_ergodic_limit(constant(1.0), one, one, make_settings())
    assert not estimate.vanishing
    assert estimate.extrapolated == pytest.approx(1.0, rel=1e-10)


def test_one_sided_ergodic_closed_form():
    one = Weight.constant()
    T = 3.0
    value = one_sided_ergodic(decay(two_sided=False), one, one, T)
    assert value == pytest.approx((1.0 - math.exp(-T)) / T, rel=1e-10)


def test_stepanov_ergodic_zero_and_decay():
    one = Weight.constant()
    assert stepanov_ergodic(zero_signal(), one, one).vanishing
    assert stepanov_ergodic(decay(), one, one).vanishing


def test_nested_ergodic_functionals():
    settings = Settings().replace(ladder_levels=6)
    one = Weight.constant()
    assert weyl_ergodic(bump(), one, one, 1.0, settings).vanishing
    assert besicovitch_ergodic(decay(), one, one, 1.0, settings).vanishing
    flat = weyl_ergodic(constant(1.0), one, one, 1.0, settings)
    assert not flat.vanishing
    assert flat.extrapolated == pytest.approx(1.0, abs=1e-6)


def test_fit_decay_exponent_recovers_power():
    params = np.array([4.0, 8.0, 16.0, 32.0])
    assert fit_decay_exponent(params, 3.0 / params) == pytest.approx(-1.0)
    assert fit_decay_exponent(params, np.zeros(4)) == -math.inf


def test_extrapolate_value_limsup_takes_tail_max():
    settings = Settings()
    params = [1.0, 2.0, 4.0, 8.0, 16.0]
    estimate = extrapolate_value(params, [1.0, 0.9, 1.0, 0.9, 1.0], settings, mode="limsup")
    assert estimate.method == "tail-max"
    assert estimate.extrapolated == pytest.approx(1.0)


def test_extrapolate_vanishing_reports_non_finite_rungs():
    estimate = extrapolate_vanishing([1.0, 2.0, 4.0], [0.1, math.inf, 0.01])
    assert not estimate.converged
    assert estimate.diagnostics["non_finite_at"] == [2.0]


def test_limit_estimate_requires_increasing_ladder():
    with pytest.raises(EstimatorError, match="递增"):
        LimitEstimate([(2.0, 1.0), (1.0, 1.0)], 1.0, "tail-mean", True, 0.0)


def test_limit_estimate_csv_and_json(tmp_path):
    estimate = extrapolate_vanishing([4.0, 8.0, 16.0, 32.0], [0.25, 0.125, 0.0625, 1e-4])
    path = tmp_path / "ladder.csv"
    estimate.to_csv(path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "parameter,value"
    payload = json_safe({"estimate": estimate, "bad": math.nan})
    assert payload["bad"] is None
    assert payload["estimate"]["vanishing"] is True
