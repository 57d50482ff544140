import math

import numpy as np
import pytest
from scipy import linalg, special

from wpaa.config_loader import Settings
from wpaa.opfam import (
    Bn_constant,
    Mn_constant,
    OperatorModel,
    OperatorModelError,
    P_gamma,
    S_gamma,
    check_condition_P,
    contour_Tnu,
    fit_bound_A,
    fractional_power,
    kernel_norm_table,
    mittag_leffler,
    poisson_eigenpairs,
    poisson_operator,
    semigroup_check,
    subordinated_multipliers,
    sum_Mn_check,
    wright_mass,
    wright_phi,
    wright_regime_report,
    write_kernel_table,
    y_norm,
)


def make_model(**constants) -> OperatorModel:
    matrix = np.array([[-2.0, 0.5, 0.0], [0.5, -1.5, 0.25], [0.0, 0.25, -3.0]])
    return OperatorModel(matrix, **constants)


def test_wright_half_matches_gaussian_closed_form():
    z = np.linspace(0.0, 5.0, 101)
    values = wright_phi(0.5, z)
    np.testing.assert_allclose(values, np.exp(-z * z / 4.0) / math.sqrt(math.pi), rtol=0.0, atol=1e-10)
    assert wright_phi(0.5, 0.0) == pytest.approx(0.56419, abs=1e-5)
    assert wright_phi(0.5, 2.0) == pytest.approx(0.20755, abs=1e-5)


def test_wright_damped_branch_beyond_switch_point():
    z = 10.0
    assert wright_phi(0.5, z) == pytest.approx(math.exp(-z * z / 4.0) / math.sqrt(math.pi), rel=1e-8)


@pytest.mark.parametrize("gamma", [0.3, 0.5, 0.7])
def test_wright_density_has_unit_mass(gamma):
    assert wright_mass(gamma) == pytest.approx(1.0, abs=1e-8)


def test_wright_first_moment():
    assert wright_mass(0.5, moment=1) == pytest.approx(1.0 / special.gamma(1.5), abs=1e-8)
    assert wright_mass(0.5, moment=1) == pytest.approx(1.12838, abs=1e-5)


def test_wright_rejects_gamma_outside_unit_interval():
    with pytest.raises(OperatorModelError, match="γ"):
        wright_phi(1.0, 0.5)
    with pytest.raises(OperatorModelError):
        wright_phi(0.5, -1.0)


def test_wright_regime_report_has_all_branches():
    report = wright_regime_report(0.5)
    assert report["switch_point"] == Settings().wright_switch
    z = report["switch_point"]
    assert report["damped"] == pytest.approx(math.exp(-z * z / 4.0) / math.sqrt(math.pi), rel=1e-8)
    assert report["saddle_relative"] < 0.1


def test_mittag_leffler_values():
    assert mittag_leffler(0.5, 1.0, -1.0) == pytest.approx(0.42758, abs=1e-5)
    assert mittag_leffler(1.0, 1.0, 1.5) == pytest.approx(math.exp(1.5), rel=1e-14)
    assert mittag_leffler(0.5, 1.0, 0.0) == pytest.approx(1.0)
    with pytest.raises(OperatorModelError):
        mittag_leffler(0.0, 1.0, 1.0)


@pytest.mark.parametrize("gamma", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_scalar_subordination_matches_mittag_leffler(gamma, a):
    model = OperatorModel.scalar(-a)
    for t in (0.25, 1.0, 4.0):
        z = -a * t ** gamma
        assert S_gamma(model, gamma, t)[0, 0] == pytest.approx(mittag_leffler(gamma, 1.0, z), rel=1e-6)
        assert P_gamma(model, gamma, t)[0, 0] == pytest.approx(mittag_leffler(gamma, gamma, z), rel=1e-6)


def test_subordination_requires_stable_operator():
    with pytest.raises(OperatorModelError, match="左半平面"):
        subordinated_multipliers(OperatorModel.scalar(1.0), 0.5, 0.0, [1.0])


def test_contour_family_matches_matrix_exponential():
    model = make_model()
    for t in np.logspace(np.log10(0.1), np.log10(5.0), 20):
        np.testing.assert_allclose(contour_Tnu(model, 0.0, t), linalg.expm(t * model.matrix),
                                   rtol=0.0, atol=1e-8)


def test_contour_family_rejects_bad_arguments():
    model = make_model()
    with pytest.raises(OperatorModelError, match="t"):
        contour_Tnu(model, 0.0, 0.0)
    with pytest.raises(OperatorModelError, match="ν"):
        contour_Tnu(model, -0.5, 1.0)


def test_semigroup_property_of_contour_family():
    assert semigroup_check(make_model(), times=(0.5, 1.0)) <= 1e-8


def test_fractional_power_and_y_norm():
    model = OperatorModel.scalar(-4.0, theta=0.5)
    np.testing.assert_allclose(fractional_power(model, 0.5), [[2.0]])
    assert y_norm(model, np.array([3.0])) == pytest.approx(6.0)
    with pytest.raises(OperatorModelError):
        fractional_power(OperatorModel.scalar(1.0), 0.5)


def test_condition_P_examples():
    assert check_condition_P(OperatorModel.scalar(-1.0)).passed
    unstable = check_condition_P(OperatorModel.scalar(1.0))
    assert not unstable.passed and unstable.spectrum_witness == complex(1.0)
    tight = check_condition_P(OperatorModel.scalar(-1.0, M=0.1))
    assert not tight.passed and tight.worst_ratio > 1.0


@pytest.mark.parametrize("nu", [0.0, 0.3])
def test_bound_A_holds_with_fitted_constant(nu):
    model = OperatorModel.scalar(-1.0, beta=0.9, theta=0.3)
    fit = fit_bound_A(model, nu, np.logspace(-2, 1, 13))
    assert fit.holds
    assert math.isfinite(fit.M_hat) and fit.M_hat > 0


def test_Mn_closed_form_uses_gamma_function():
    value = Mn_constant(1, 1.0, M=1.0, c=1.0, beta=0.9, theta=0.3)
    assert value == pytest.approx(special.gamma(0.6), rel=1e-14)
    assert value == pytest.approx(1.48919, abs=1e-5)


@pytest.mark.parametrize("n", [1, 2])
def test_Mn_nested_quadrature_matches_closed_form(n):
    closed = Mn_constant(n, 0.5, M=1.0, c=1.0, beta=0.9, theta=0.3)
    nested = Mn_constant(n, lambda x: np.full_like(x, 0.5), M=1.0, c=1.0, beta=0.9, theta=0.3)
    assert nested == pytest.approx(closed, rel=1e-6)


def test_Mn_validates_parameters():
    with pytest.raises(OperatorModelError, match="不可积"):
        Mn_constant(1, 1.0, M=1.0, c=1.0, beta=0.3, theta=0.3)
    with pytest.raises(OperatorModelError, match="n ≤ 3"):
        Mn_constant(4, lambda x: np.ones_like(x), M=1.0, c=1.0, beta=1.0, theta=0.0)


def test_sum_Mn_check_is_geometric():
    result = sum_Mn_check(4, 0.1, M=4.0, c=0.5, beta=1.0, theta=0.0)
    assert result["M_n"][0] == pytest.approx(0.8)
    assert result["summable"]
    assert result["ratios"][0] == pytest.approx(0.8)


def test_Bn_constant_for_scalar_operator():
    model = OperatorModel.scalar(-1.0)
    first = Bn_constant(1, 0.8, model, 0.5)
    # ∫_0^∞ t^{γ-1} E_{γ,γ}(-t^γ) dt = 1
    assert first == pytest.approx(0.8, rel=1e-4)
    assert Bn_constant(2, 0.8, model, 0.5) == pytest.approx(first ** 2, rel=1e-12)
    assert Bn_constant(1, 0.0, model, 0.5) == 0.0


def test_poisson_eigenpairs_match_numeric_spectrum():
    model = poisson_operator(16, b=1.0)
    values, vectors = poisson_eigenpairs(16, b=1.0)
    np.testing.assert_allclose(values, np.sort(np.linalg.eigvalsh(model.matrix)), rtol=1e-12)
    np.testing.assert_allclose(model.matrix @ vectors, vectors * values[None, :], atol=1e-8)
    h = 1.0 / 17.0
    assert values[-1] == pytest.approx(-(4.0 / h ** 2) * math.sin(math.pi * h / 2.0) ** 2 - 1.0)


def test_operator_model_validation():
    with pytest.raises(OperatorModelError, match="方阵"):
        OperatorModel(np.ones((2, 3)))
    with pytest.raises(OperatorModelError, match="θ"):
        OperatorModel.scalar(-1.0, beta=0.5, theta=-0.6)
    with pytest.raises(OperatorModelError):
        OperatorModel.from_dict({"unknown": 1})


def test_default_constants_use_identity_power():
    for model in (OperatorModel.scalar(-1.0), OperatorModel.diagonal([-1.0, -2.0]), poisson_operator(8, 1.0)):
        assert model.theta == 0.0 and model.beta == 1.0
    assert OperatorModel.scalar(-1.0, beta=0.5, theta=0.0).theta == 0.0
    assert OperatorModel.from_dict({"scalar": -1.0, "beta": 1.0, "theta": 0.0}).dim == 1


def test_operator_model_from_dict_variants():
    assert OperatorModel.from_dict({"scalar": -2.0}).dim == 1
    assert OperatorModel.from_dict({"diagonal": [-1.0, -2.0]}).dim == 2
    assert OperatorModel.from_dict({"poisson": {"n": 8, "b": 1.0}}).dim == 8
    model = OperatorModel.from_dict({"matrix": [[-1.0, 0.0], [1.0, -2.0]], "M": 2.0})
    assert model.M == 2.0 and not model.normal
    assert OperatorModel.from_dict(model.to_dict()).M == 2.0


def test_kernel_norm_table_written_as_csv(tmp_path):
    rows = kernel_norm_table(OperatorModel.scalar(-1.0, theta=0.25), 0.5, t_grid=[0.5, 1.0, 2.0])
    assert len(rows) == 3
    assert all(row["R_gamma"] > 0 for row in rows)
    path = write_kernel_table(rows, tmp_path / "kernel.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "t,R_gamma,R_gamma_theta"
