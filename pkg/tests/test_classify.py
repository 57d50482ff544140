import math

import numpy as np
import pytest

from wpaa import classify
from wpaa.classify import (
    PropositionReport,
    Verdict,
    aa_test,
    ap_test,
    continued_fraction_denominators,
    convolution_invariance_demo,
    dominator_ladder,
    epsilon_periods,
    kernel_l1,
    membership,
    sp_aa_test,
    translation_invariance_check,
    verify_weyl_extension,
    weyl_vanishing_test,
)
from wpaa.config_loader import Settings
from wpaa.seminorms import EstimatorError
from wpaa.signals import (
    Weight,
    bump,
    constant,
    decay,
    identity_map,
    ladder_stabilized,
    power_decay,
    translate,
    trig,
    zero_signal,
)

TWO_PI = 2.0 * math.pi


def make_settings(**changes) -> Settings:
    base = {"ladder_levels": 8, "census_scan_range": 200.0}
    base.update(changes)
    return Settings().replace(**base)


def periodic_sequence(count: int = 8) -> list[float]:
    return [TWO_PI * n for n in range(1, count + 1)]


def test_continued_fraction_denominators_of_sqrt2():
    assert continued_fraction_denominators(math.sqrt(2.0), 5) == [1, 2, 5, 12, 29]


def test_epsilon_periods_of_sin_cluster_near_multiples_of_two_pi():
    census = epsilon_periods(trig(), 0.5, settings=make_settings())
    assert census.relatively_dense
    periods = np.asarray(census.periods)
    distance = np.abs(periods - TWO_PI * np.round(periods / TWO_PI))
    assert np.all(distance <= 2.0 * math.asin(0.25) + 0.03)


def test_epsilon_periods_rejects_nonpositive_epsilon():
    with pytest.raises(EstimatorError, match="ε"):
        epsilon_periods(trig(), 0.0)


def test_ap_test_verdicts():
    settings = make_settings()
    assert ap_test(trig(), settings=settings).verdict is Verdict.MEMBER
    assert ap_test(zero_signal(), settings=settings).verdict is Verdict.MEMBER
    assert ap_test(identity_map(), settings=settings).verdict is Verdict.NON_MEMBER
    assert ap_test(decay(), settings=settings).verdict is Verdict.NON_MEMBER


def test_aa_test_sin_with_period_sequence():
    result = aa_test(trig(), periodic_sequence(), make_settings())
    assert result.verdict is Verdict.MEMBER
    assert result.forward_error <= 1e-3 and result.backward_error <= 1e-3
    assert result.limit is not None


def test_aa_test_identity_is_inconclusive():
    result = aa_test(identity_map(), settings=make_settings())
    assert result.verdict is Verdict.INCONCLUSIVE


def test_sp_aa_test_verdicts():
    settings = make_settings()
    assert sp_aa_test(trig(), 1.0, periodic_sequence(), settings).verdict is Verdict.MEMBER
    grows = sp_aa_test(identity_map(), 1.0, settings=settings)
    assert grows.verdict is Verdict.NON_MEMBER
    assert "无界" in grows.reason


def test_pseudo_space_requires_declared_split():
    verdict = membership(trig() + decay(), "WPAA", settings=make_settings())
    assert verdict.verdict is Verdict.INCONCLUSIVE
    assert "分解" in verdict.reason


def test_pseudo_space_with_split():
    settings = make_settings()
    f = trig() + decay()
    verdict = membership(f, "WPAA", split=(trig(), decay()), rho1=Weight.polynomial(),
                         sequence=periodic_sequence(), settings=settings)
    assert verdict.verdict is Verdict.MEMBER
    assert verdict.evidence["recurrent"].is_member
    assert verdict.evidence["ergodic"].is_member


def test_inconsistent_split_is_inconclusive():
    verdict = membership(trig(), "WPAA", split=(trig(), decay()), settings=make_settings())
    assert verdict.verdict is Verdict.INCONCLUSIVE
    assert "split_residual" in verdict.evidence


def test_unknown_space_raises():
    with pytest.raises(EstimatorError, match="未知的函数空间"):
        membership(trig(), "XYZ")


def test_pap0_membership_and_non_membership():
    settings = make_settings()
    assert membership(decay(), "PAP0", rho1=Weight.polynomial(), settings=settings).is_member
    flat = membership(trig(), "PAP0", settings=Settings())
    assert flat.verdict is Verdict.NON_MEMBER


def test_weyl_extension_of_bump_passes():
    report = verify_weyl_extension(bump())
    assert report.status == "pass"
    assert [h["name"] for h in report.hypotheses] == ["q_in_Wp0"]


def test_weyl_extension_of_one_sided_exponential_passes():
    report = verify_weyl_extension(decay(two_sided=False))
    assert report.status == "pass"
    assert report.checks[0]["name"] == "extension_in_WpWPAA0"


def test_slow_power_decay_is_weyl_vanishing():
    # (1+t)^{-1/4} 不可积，但窗口均值仍趋于 0
    assert weyl_vanishing_test(power_decay(exponent=0.25)).verdict is Verdict.MEMBER


def test_weyl_extension_of_constant_violates_hypothesis():
    report = verify_weyl_extension(constant(1.0))
    assert report.status == "hypothesis-violated"
    assert not report.checks


def test_translation_invariance_with_polynomial_weights():
    settings = make_settings()
    rho = Weight.polynomial()
    report = translation_invariance_check(rho, rho, dominator=lambda s: 2.0 * (1.0 + s * s), settings=settings)
    assert report.status == "pass"
    names = [c["name"] for c in report.checks]
    assert "boundary_ratio[s=1]" in names and "dominator[s=-3]" in names


def test_translation_invariance_fails_for_gaussian_weights():
    rho = Weight.gaussian()
    report = translation_invariance_check(rho, rho, settings=make_settings())
    assert report.status == "fail"
    dominators = [c for c in report.checks if c["name"].startswith("dominator")]
    assert all(c["passed"] is False for c in dominators)
    assert all(math.isinf(c["g"]) for c in dominators)


def test_polynomial_pair_keeps_translated_decay_vanishing():
    settings = make_settings()
    rho = Weight.polynomial()
    for s in (1.0, -3.0):
        verdict = membership(translate(decay(), s), "PAP0", rho1=rho, rho2=rho, settings=settings)
        assert verdict.is_member


def test_dominator_ladder_stabilizes_for_polynomial_weight():
    ladder = dominator_ladder(Weight.polynomial(), 1.0, make_settings())
    assert ladder_stabilized(ladder)
    assert math.exp(ladder[-1][1]) <= 4.0


def test_kernel_l1_of_one_sided_exponential():
    total, length = kernel_l1(decay(two_sided=False), make_settings())
    assert total == pytest.approx(1.0, abs=1e-10)
    assert length >= 16.0


def test_convolution_invariance_demo_passes():
    report = convolution_invariance_demo(decay(), decay(two_sided=False), Weight.polynomial(),
                                         Weight.constant(), settings=Settings().replace(ladder_levels=6))
    assert report.status == "pass"
    assert any(c["name"] == "functional_bound" and c["passed"] for c in report.checks)


def test_proposition_report_resolution_order():
    report = PropositionReport("demo")
    report.add_check("a", True)
    assert report.resolve().status == "pass"
    report.add_check("b", None)
    assert report.resolve().status == "inconclusive"
    report.add_check("c", False)
    assert report.resolve().status == "fail"
    report.add_hypothesis("h", False)
    assert report.resolve().status == "hypothesis-violated"


def test_proposition_report_without_checks_is_inconclusive():
    assert PropositionReport("empty").resolve().status == "inconclusive"


def test_verdict_of_maps_values():
    assert classify._verdict_of("member") is True
    assert classify._verdict_of(Verdict.NON_MEMBER) is False
    assert classify._verdict_of("inconclusive") is None
