import math

import numpy as np
import pytest

from wpaa.config_loader import Settings
from wpaa.opfam import Bn_constant, OperatorModel, OperatorModelError, poisson_eigenpairs
from wpaa.quadrature import TailBoundError
from wpaa.seminorms import EstimatorError
from wpaa.signals import (
    GridFunction,
    Weight,
    constant,
    decay,
    identity_map,
    lift_to_vector,
    sample,
    trig,
)
from wpaa.volterra import (
    ConvolutionTask,
    ExponentialKernel,
    Nonlinearity,
    SemigroupKernel,
    SignalKernel,
    SubordinatedKernel,
    contraction_constants,
    finite_convolution,
    fractional_derivative,
    infinite_convolution,
    kernel_from_dict,
    kernel_moment,
    kernel_summability,
    poisson_heat_scenario,
    semilinear_fixed_point,
    steady_amplitude,
    tabulate_convolution,
    verify_fixed_point,
    verify_prop_besicovitch,
    verify_prop_finite,
    verify_prop_infinite,
    weyl_liouville_residual,
    write_trajectory,
)


def make_task(forcing=None, **kwargs) -> ConvolutionTask:
    kwargs.setdefault("tolerance", 1e-10)
    return ConvolutionTask(ExponentialKernel(1.0), trig() if forcing is None else forcing, **kwargs)


def run_fixed_point(nonlinearity, kernel=None):
    kernel = kernel or SemigroupKernel(OperatorModel.scalar(-1.0))
    return semilinear_fixed_point(kernel, nonlinearity, window=8.0, history=32.0)


def test_infinite_convolution_of_sin_with_exponential():
    t = np.array([0.0, math.pi / 2, 1.3, -4.0])
    values = infinite_convolution(make_task(), t)[:, 0]
    np.testing.assert_allclose(values, (np.sin(t) - np.cos(t)) / 2.0, rtol=0.0, atol=1e-8)


def test_tabulated_convolution_tracks_pointwise_values():
    grid = tabulate_convolution(make_task(), (0.0, math.pi / 2), step=1.0 / 32.0)
    t = grid.times
    assert t[0] == 0.0
    np.testing.assert_allclose(grid.values[:, 0], (np.sin(t) - np.cos(t)) / 2.0, atol=2e-4)


def test_semigroup_kernel_acts_per_mode():
    kernel = SemigroupKernel(OperatorModel.diagonal([-1.0, -2.0]))
    task = ConvolutionTask(kernel, lift_to_vector(trig(), [1.0, 1.0]), tolerance=1e-10)
    t = np.array([0.0, 1.0])
    values = infinite_convolution(task, t)
    np.testing.assert_allclose(values[:, 0], (np.sin(t) - np.cos(t)) / 2.0, atol=1e-8)
    np.testing.assert_allclose(values[:, 1], (2.0 * np.sin(t) - np.cos(t)) / 5.0, atol=1e-8)


def test_two_sided_signal_kernel_integrates_over_both_sides():
    task = ConvolutionTask(SignalKernel(decay()), constant(1.0), tolerance=1e-10)
    assert infinite_convolution(task, 0.7)[0] == pytest.approx(2.0, abs=1e-9)


def test_finite_convolution_from_zero():
    task = make_task(constant(1.0), side="finite")
    t = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(finite_convolution(task, t)[:, 0], 1.0 - np.exp(-t), atol=1e-10)
    grid = tabulate_convolution(task, (0.0, 3.0), step=0.125)
    np.testing.assert_allclose(grid.values[:, 0], 1.0 - np.exp(-grid.times), atol=1e-9)


def test_finite_tabulation_keeps_last_node_whole():
    task = make_task(constant(1.0), side="finite")
    grid = tabulate_convolution(task, (0.0, 3.0), step=0.125)
    assert grid.end == pytest.approx(3.0)
    assert grid.values[-1, 0] == pytest.approx(1.0 - math.exp(-3.0), abs=1e-9)
    assert grid.values[-1, 0] > grid.values[-2, 0]


def test_finite_convolution_rejects_negative_times_and_two_sided_kernels():
    with pytest.raises(EstimatorError, match="t ≥ 0"):
        finite_convolution(make_task(constant(1.0), side="finite"), -1.0)
    task = ConvolutionTask(SignalKernel(decay()), constant(1.0), side="finite")
    with pytest.raises(EstimatorError, match="单边核"):
        finite_convolution(task, 1.0)


def test_tail_length_too_short_reports_required_length():
    task = make_task(tail_length=4.0, tolerance=1e-9)
    with pytest.raises(TailBoundError) as excinfo:
        task.resolved_length()
    assert excinfo.value.required_length == 32.0


def test_unbounded_forcing_has_no_tail_bound():
    with pytest.raises(TailBoundError, match="上界"):
        make_task(identity_map()).resolved_length()


def test_task_validates_side_and_dimension():
    with pytest.raises(EstimatorError, match="side"):
        make_task(side="both")
    kernel = SemigroupKernel(OperatorModel.diagonal([-1.0, -2.0]))
    with pytest.raises(EstimatorError, match="维数"):
        ConvolutionTask(kernel, trig())


def test_kernel_moments_of_exponential():
    kernel = ExponentialKernel(1.0)
    assert kernel_moment(kernel, 0.0) == pytest.approx(1.0, rel=1e-8)
    assert kernel_moment(kernel, 1.0) == pytest.approx(2.0, rel=1e-8)


def test_kernel_summability():
    result = kernel_summability(ExponentialKernel(1.0))
    assert result["finite"] and result["sum"] > 1.0
    singular = SubordinatedKernel(OperatorModel.scalar(-1.0), 0.5)
    assert not kernel_summability(singular, math.inf)["finite"]
    with pytest.raises(EstimatorError, match="q"):
        kernel_summability(ExponentialKernel(1.0), 0.5)


def test_model_kernels_need_real_stable_spectrum():
    rotation = OperatorModel(np.array([[-1.0, 2.0], [-2.0, -1.0]]))
    with pytest.raises(OperatorModelError, match="实数"):
        SemigroupKernel(rotation)
    with pytest.raises(OperatorModelError):
        SemigroupKernel(OperatorModel.scalar(1.0))
    with pytest.raises(OperatorModelError, match="γ"):
        SubordinatedKernel(OperatorModel.scalar(-1.0), 1.0)


def test_kernel_from_dict():
    kernel = kernel_from_dict({"kind": "semigroup", "model": {"scalar": -2.0}})
    assert isinstance(kernel, SemigroupKernel) and kernel.dim == 1
    assert kernel_from_dict({"rate": 3.0}).rate == 3.0
    with pytest.raises(OperatorModelError, match="未知的核类型"):
        kernel_from_dict({"kind": "wavelet"})


def test_nonlinearity_from_dict():
    coupling = Nonlinearity.from_dict({"coupling": {"kind": "tanh", "epsilon": 0.2}}, trig())
    assert coupling.lipschitz == pytest.approx(0.2)
    assert Nonlinearity.from_dict({}).coupling is None
    with pytest.raises(EstimatorError, match="耦合项"):
        Nonlinearity.from_dict({"coupling": {"kind": "cubic"}}, trig())


def test_contraction_constants_for_semigroup_kernel():
    constants = contraction_constants(SemigroupKernel(OperatorModel.scalar(-1.0)), 0.1)
    # M_1 = M·L·Γ(β−θ)·c^{θ−β} = 4·0.1·2
    assert constants["all"]["M_1"] == pytest.approx(0.8)
    assert constants["all"]["M_2"] == pytest.approx(0.64)
    assert constants["name"] == "M_2"


def test_contraction_constants_use_kernel_power():
    model = OperatorModel.scalar(-1.0, theta=0.3)
    kernel = SubordinatedKernel(model, 0.5)
    constants = contraction_constants(kernel, 0.1)
    assert constants["all"]["B_1"] == pytest.approx(Bn_constant(1, 0.1, model, 0.5, 0.0))
    assert constants["all"]["B_1"] == pytest.approx(0.1, rel=1e-3)


def test_fixed_point_converges_for_small_coupling():
    run = run_fixed_point(Nonlinearity.tanh(trig(), 0.1))
    assert run.hypothesis_holds
    assert run.converged and not run.diverged
    assert run.contraction <= 0.8 + 0.05
    assert run.residual <= 1e-8
    assert run.posterior_bound() < 1e-8
    assert run.solution.origin == pytest.approx(-8.0)


def test_fixed_point_with_large_constant_flags_hypothesis():
    run = run_fixed_point(Nonlinearity.tanh(trig(), 0.5))
    assert run.hypothesis_holds is False
    assert run.constant["value"] >= 1.0


def test_fixed_point_diverges_for_expanding_coupling():
    run = run_fixed_point(Nonlinearity.linear(trig(), 2.0))
    assert run.diverged and not run.converged
    assert math.isinf(run.posterior_bound())


def test_linear_forcing_needs_one_step():
    run = run_fixed_point(Nonlinearity(trig()))
    assert run.converged
    assert run.steps == 1


def test_fixed_point_rejects_two_sided_kernel():
    with pytest.raises(EstimatorError, match="因果核"):
        semilinear_fixed_point(SignalKernel(decay()), Nonlinearity(trig()))


def test_verify_fixed_point_for_semigroup_and_subordinated_kernels():
    model = OperatorModel.scalar(-1.0)
    nonlinearity = Nonlinearity.tanh(trig(), 0.1)
    report = verify_fixed_point(SemigroupKernel(model), nonlinearity)
    assert report.proposition == "fixed-point-Λ"
    assert report.status == "pass"
    report = verify_fixed_point(SubordinatedKernel(model, 0.5), nonlinearity)
    assert report.proposition == "fixed-point-Λγ"
    assert report.status == "pass"
    checks = {c["name"]: c for c in report.checks}
    assert checks["weyl_liouville_residual"]["passed"]


def test_verify_fixed_point_reports_violated_constant():
    report = verify_fixed_point(SemigroupKernel(OperatorModel.scalar(-1.0)), Nonlinearity.linear(trig(), 2.0))
    assert report.status == "hypothesis-violated"


def test_write_trajectory(tmp_path):
    run = run_fixed_point(Nonlinearity(trig()))
    path = write_trajectory(run, tmp_path / "u.csv")
    loaded = GridFunction.from_csv(path)
    assert loaded.values.shape == run.solution.values.shape


def test_fractional_derivative_of_sin_shifts_phase():
    grid = sample(trig(), (-160.0, 8.0), 1.0 / 64.0)
    derivative = fractional_derivative(grid, 0.5, history=64.0)
    assert derivative.origin == pytest.approx(-32.0)
    expected = np.sin(derivative.times + math.pi / 4.0)
    np.testing.assert_allclose(derivative.values[:, 0], expected, atol=1e-3)


def test_fractional_derivative_needs_room_for_history():
    short = GridFunction(0.0, 1.0 / 64.0, np.zeros(100))
    with pytest.raises(TailBoundError) as excinfo:
        fractional_derivative(short, 0.5, history=64.0)
    assert excinfo.value.required_length == 128.0
    with pytest.raises(OperatorModelError):
        fractional_derivative(short, 1.0)


def test_accepted_tapered_derivative_is_within_tolerance():
    grid = sample(trig(), (-160.0, 8.0), 1.0 / 64.0)
    accepted = 0
    for history in (4.0, 16.0, 64.0):
        try:
            derivative = fractional_derivative(grid, 0.5, history=history)
        except TailBoundError as exc:
            assert exc.required_length == 4.0 * history
            continue
        accepted += 1
        error = np.max(np.abs(derivative.values[:, 0] - np.sin(derivative.times + math.pi / 4.0)))
        assert error <= Settings().tolerance
    assert accepted >= 1


def test_zero_history_derivative_of_ramp():
    times = np.arange(257) / 64.0
    derivative = fractional_derivative(GridFunction(0.0, 1.0 / 64.0, times), 0.5, zero_history=True)
    assert derivative.origin == pytest.approx(1.0 / 64.0)
    late = derivative.times >= 1.0
    expected = 2.0 * np.sqrt(derivative.times[late] / math.pi)
    np.testing.assert_allclose(derivative.values[late, 0], expected, atol=1e-4)


@pytest.mark.parametrize("gamma", [0.3, 0.5, 0.8])
def test_zero_history_derivative_of_switched_on_constant(gamma):
    derivative = fractional_derivative(GridFunction(0.0, 1.0 / 64.0, np.ones(257)), gamma, zero_history=True)
    late = derivative.times >= 1.0
    expected = derivative.times[late] ** (-gamma) / math.gamma(1.0 - gamma)
    np.testing.assert_allclose(derivative.values[late, 0], expected, atol=1e-4)


def test_subordinated_fixed_point_solves_weyl_liouville_equation():
    model = OperatorModel.scalar(-1.0)
    kernel = SubordinatedKernel(model, 0.5)
    nonlinearity = Nonlinearity.tanh(trig(), 0.1)
    run = semilinear_fixed_point(kernel, nonlinearity)
    assert run.converged
    residual = weyl_liouville_residual(run.grid, 0.5, model, nonlinearity, zero_history=True,
                                      start=run.solution.origin)
    assert residual <= 1e-3


def test_steady_amplitude_limits():
    mu = float(poisson_eigenpairs(16, b=1.0)[0][-1])
    exact = 1.0 / math.sqrt(mu * mu + 1.0)
    assert steady_amplitude(mu, 1.0, 1.0) == pytest.approx(exact, rel=1e-14)
    assert steady_amplitude(mu, 0.999, 1.0) == pytest.approx(exact, abs=2e-3)


def test_poisson_heat_scenario_matches_closed_form_amplitude():
    report = poisson_heat_scenario(n_grid=16, b=1.0, gamma=1.0, g=trig(), classify_trajectory=False)
    assert report.status == "pass"
    checks = {c["name"]: c for c in report.checks}
    assert checks["steady_amplitude"]["passed"]
    assert report.hypotheses[0]["name"] == "condition_P"


def test_poisson_heat_scenario_without_forcing_stays_zero():
    report = poisson_heat_scenario(n_grid=8, gamma=1.0, settings=Settings().replace(fixed_point_window=4.0,
                                                                                     fixed_point_history=8.0))
    assert report.status == "pass"
    assert any(c["name"] == "zero_response" for c in report.checks)


def test_poisson_heat_scenario_fractional_with_classification():
    report = poisson_heat_scenario(n_grid=16, b=1.0, gamma=0.5, g=trig(), q=decay(), classify_trajectory=True)
    assert report.status == "pass"
    checks = {c["name"]: c for c in report.checks}
    assert checks["mode_response"]["passed"]
    assert checks["trajectory_weighted_pseudo_aa"]["passed"]


def test_verify_prop_infinite_for_sin_plus_decay():
    report = verify_prop_infinite(trig(), decay(), kernel_from_dict({"kind": "exponential"}))
    assert report.status == "pass"
    assert [h["name"] for h in report.hypotheses] == ["translation_invariant", "kernel_summable"]
    assert {c["name"] for c in report.checks} == {"G_recurrent", "Q_vanishing"}


def test_verify_prop_infinite_needs_summable_kernel():
    singular = SubordinatedKernel(OperatorModel.scalar(-1.0), 0.5)
    report = verify_prop_infinite(trig(), decay(), singular, p=1.0)
    assert report.status == "hypothesis-violated"
    assert not report.checks


def test_verify_prop_besicovitch_for_decay():
    report = verify_prop_besicovitch(trig(), decay(), kernel_from_dict({"kind": "exponential"}),
                                     Weight.polynomial(), Weight.constant())
    assert report.status == "pass"
    checks = {c["name"]: c for c in report.checks}
    assert checks["final_bound"]["passed"]


def test_verify_prop_finite_for_one_sided_decay():
    report = verify_prop_finite(decay(two_sided=False), kernel_from_dict({"kind": "exponential"}),
                                Weight.polynomial(), Weight.polynomial(),
                                dominator=lambda s: 2.0 * (1.0 + s * s))
    assert report.status == "pass"
    scan = report.hypotheses[0]["scan"]
    assert scan[0]["s"] == 0.0 and scan[-1]["s"] == pytest.approx(Settings().dominator_shift_max)


def test_verify_prop_finite_follows_shift_settings():
    settings = Settings().replace(dominator_shift_max=4.0, dominator_shift_step=1.0)
    report = verify_prop_finite(decay(two_sided=False), kernel_from_dict({"kind": "exponential"}),
                                Weight.polynomial(), Weight.polynomial(), settings=settings)
    assert [row["s"] for row in report.hypotheses[0]["scan"]] == [0.0, 1.0, 2.0, 3.0, 4.0]
