"""
函数空间的判定过程与权函数条件检查。

所有判定都基于有限扫描与容差：ε-周期普查（Bohr 意义下的 a.p.）、按给定序列检验的
a.a. / S^p-a.a.、各遍历分量空间的消失判定，以及伪空间（需声明分解 f = g + q）。
结论只有 member / non-member / inconclusive 三种，从不超出所检验序列与阶梯的支持。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from wpaa import seminorms
from wpaa.config_loader import Settings, resolve_settings
from wpaa.quadrature import (
    CumulativeIntegral,
    TailBoundError,
    grid_convolution,
    map_nodes,
    product_weights,
    zoned_breaks,
)
from wpaa.seminorms import EstimatorError, LimitEstimate, extrapolate_value, json_safe
from wpaa.signals import (
    SCAN_STEP,
    AnalyticSignal,
    GridFunction,
    TablePart,
    Weight,
    extend_by_zero,
    ladder_stabilized,
    log_sup_ladder,
    sample,
    translate,
    v_infinity_check,
    weight_classes,
    weights_equivalent,
)

logger = logging.getLogger(__name__)

# ap_test 的默认 ε 序列
DEFAULT_EPS_SCHEDULE = (0.5, 0.2)
# 默认检验序列长度
DEFAULT_SEQUENCE_LENGTH = 16


class Verdict(str, Enum):
    MEMBER = "member"
    NON_MEMBER = "non-member"
    INCONCLUSIVE = "inconclusive"


# 单空间 → 判定函数名；伪空间 → (回归部分空间, 遍历部分空间)
SPACES = ("AP", "AA", "SpAP", "SpAA", "PAP0", "SpWPAA0", "WpWPAA0", "BpWPAA0", "eWp0", "Wp0")
PSEUDO_SPACES = {
    "WPAP": ("AP", "PAP0"),
    "WPAA": ("AA", "PAP0"),
    "SpWPAP": ("SpAP", "SpWPAA0"),
    "SpWPAA": ("SpAA", "SpWPAA0"),
    # W^p / B^p 回归部分用 S^p-a.a. 检验（S^p-a.a. 蕴含 W^p-、B^p-a.a.，仅为充分检验）
    "WpWPAA": ("SpAA", "WpWPAA0"),
    "BpWPAA": ("SpAA", "BpWPAA0"),
}

STATUSES = ("pass", "fail", "hypothesis-violated", "inconclusive")


@dataclass
class MembershipVerdict:
    space: str
    verdict: Verdict
    evidence: object = None
    tolerance: float = 1e-3
    reason: str = ""
    sequence_tested: Optional[list] = None

    @property
    def is_member(self) -> bool:
        return self.verdict is Verdict.MEMBER

    def to_dict(self) -> dict:
        data = {
            "space": self.space,
            "verdict": self.verdict.value,
            "tolerance": self.tolerance,
            "reason": self.reason,
            "evidence": json_safe(self.evidence),
        }
        if self.sequence_tested is not None:
            data["sequence_tested"] = json_safe(self.sequence_tested)
        return data


@dataclass
class EpsPeriodCensus:
    """ε-周期普查：periods 为通过 sup 检验的 τ，inclusion_length 为最大间隙。"""

    epsilon: float
    periods: list
    inclusion_length: float
    scan_range: float
    relatively_dense: bool
    metric: str = "sup"
    refined: int = 0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "period_count": len(self.periods),
            "periods": [float(x) for x in self.periods[:200]],
            "inclusion_length": self.inclusion_length,
            "scan_range": self.scan_range,
            "relatively_dense": self.relatively_dense,
            "metric": self.metric,
            "refined": self.refined,
        }


@dataclass
class SequenceTestResult:
    """按序列检验的结果：候选极限 g、正向与反向误差、选中的子序列。"""

    verdict: Verdict
    limit: Optional[GridFunction]
    forward_error: float
    backward_error: float
    sequence: list
    subsequence: list
    metric: str = "sup"
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "forward_error": self.forward_error,
            "backward_error": self.backward_error,
            "sequence": self.sequence,
            "subsequence": self.subsequence,
            "metric": self.metric,
            "reason": self.reason,
        }


@dataclass
class PropositionReport:
    """命题检验报告：假设逐条记录，检查逐条记录，status 由二者汇总。"""

    proposition: str
    status: str = "inconclusive"
    hypotheses: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_hypothesis(self, name: str, holds: Optional[bool], **detail) -> None:
        self.hypotheses.append({"name": name, "holds": holds, **detail})

    def add_check(self, name: str, passed: Optional[bool], **detail) -> None:
        self.checks.append({"name": name, "passed": passed, **detail})

    def resolve(self) -> "PropositionReport":
        if any(h["holds"] is False for h in self.hypotheses):
            self.status = "hypothesis-violated"
        elif any(c["passed"] is False for c in self.checks):
            self.status = "fail"
        elif any(h["holds"] is None for h in self.hypotheses) or any(c["passed"] is None for c in self.checks):
            self.status = "inconclusive"
        elif self.checks:
            self.status = "pass"
        else:
            self.status = "inconclusive"
        return self

    def to_dict(self) -> dict:
        return json_safe({
            "proposition": self.proposition,
            "status": self.status,
            "hypotheses": self.hypotheses,
            "checks": self.checks,
            "notes": self.notes,
        })


def _verdict_of(value) -> Optional[bool]:
    """member → True，non-member → False，其余 None。"""
    verdict = value.verdict if isinstance(value, (MembershipVerdict, SequenceTestResult)) else Verdict(value)
    if verdict is Verdict.MEMBER:
        return True
    if verdict is Verdict.NON_MEMBER:
        return False
    return None


# ---------------------------------------------------------------------------
# ε-周期
# ---------------------------------------------------------------------------


def _census_points(metric: str, settings: Settings) -> tuple[np.ndarray, Optional[np.ndarray]]:
    if metric == "sup":
        return np.linspace(0.0, settings.census_t_span, settings.census_t_points), None
    if metric == "stepanov":
        starts = np.arange(0.0, settings.census_t_span + 0.5, 1.0)
        nodes, weights = map_nodes(starts, starts + 1.0, settings.quad_order)
        return nodes.ravel(), weights
    raise EstimatorError(f"未知的普查度量: {metric}")


def _discrepancy(f: AnalyticSignal, taus: np.ndarray, points: np.ndarray, base: np.ndarray,
                 weights: Optional[np.ndarray], p: float) -> np.ndarray:
    """D(τ) = sup_t ‖f(t+τ) - f(t)‖（sup）或单位窗 L^p 差的最大值（stepanov）。"""
    taus = np.atleast_1d(taus)
    chunk = max(1, (1 << 16) // points.size)
    out = np.empty(taus.size)
    for start in range(0, taus.size, chunk):
        block = taus[start:start + chunk]
        shifted = f((block[:, None] + points[None, :]).ravel()).reshape(block.size, points.size, -1)
        gaps = np.linalg.norm(shifted - base[None, :, :], axis=2)
        if weights is None:
            out[start:start + chunk] = gaps.max(axis=1)
        else:
            windows = gaps.reshape(block.size, *weights.shape) ** p
            out[start:start + chunk] = np.max(np.sum(windows * weights[None], axis=2), axis=1) ** (1.0 / p)
    return out


def epsilon_periods(f: AnalyticSignal, epsilon: float, scan_range: Optional[float] = None,
                    tau_step: Optional[float] = None, settings: Optional[Settings] = None,
                    metric: str = "sup", p: float = 1.0) -> EpsPeriodCensus:
    """
    在 τ 网格 [min_period, scan_range] 上普查 ε-周期。

    网格点直接按 D(τ) ≤ ε 判定；严格局部极小且 D ≤ ε + 邻距 的点再用有界标量极小化
    细化，细化后仍 ≤ ε 的 τ* 一并计入。ℓ 为 0、各周期、scan_range 之间的最大间隙。
    """
    if not epsilon > 0:
        raise EstimatorError(f"ε 必须为正: {epsilon}")
    settings = resolve_settings(settings)
    scan_range = settings.census_scan_range if scan_range is None else float(scan_range)
    tau_step = settings.census_tau_step if tau_step is None else float(tau_step)
    gap_limit = settings.census_gap_fraction * scan_range

    if f.is_zero():
        return EpsPeriodCensus(epsilon, [settings.census_min_period], settings.census_min_period,
                               scan_range, True, metric)

    points, weights = _census_points(metric, settings)
    base = f(points).reshape(points.size, -1)
    taus = np.arange(settings.census_min_period, scan_range + tau_step / 2, tau_step)
    D = _discrepancy(f, taus, points, base, weights, p)

    periods = list(taus[D <= epsilon])
    slack = np.zeros_like(D)
    slack[1:-1] = np.maximum(np.abs(D[1:-1] - D[:-2]), np.abs(D[2:] - D[1:-1]))
    strict = np.zeros(D.size, dtype=bool)
    strict[1:-1] = (D[1:-1] < D[:-2]) & (D[1:-1] <= D[2:])
    candidates = np.flatnonzero(strict & (D <= epsilon + slack))
    if candidates.size > settings.census_max_refinements:
        candidates = candidates[np.argsort(D[candidates])[:settings.census_max_refinements]]

    def objective(tau):
        return float(_discrepancy(f, np.array([tau]), points, base, weights, p)[0])

    refined = 0
    for index in candidates:
        lower = max(settings.census_min_period, taus[index] - tau_step)
        result = optimize.minimize_scalar(objective, bounds=(lower, taus[index] + tau_step),
                                          method="bounded", options={"xatol": 1e-10})
        refined += 1
        if result.fun <= epsilon:
            periods.append(float(result.x))
    periods = sorted(float(x) for x in periods)

    edges = np.concatenate([[0.0], periods, [scan_range]])
    inclusion = float(np.max(np.diff(edges)))
    dense = bool(periods) and inclusion <= gap_limit
    logger.debug("ε=%g 普查: %d 个周期, ℓ=%.4g, 细化 %d 次", epsilon, len(periods), inclusion, refined)
    return EpsPeriodCensus(epsilon, periods, inclusion, scan_range, dense, metric, refined)


def _ap_verdict(censuses: list[EpsPeriodCensus], space: str, settings: Settings) -> MembershipVerdict:
    if all(c.relatively_dense for c in censuses):
        verdict, reason = Verdict.MEMBER, "每个 ε 的普查都相对稠密"
    elif not censuses[0].periods:
        verdict, reason = Verdict.NON_MEMBER, f"ε={censuses[0].epsilon:g} 时扫描范围内没有 ε-周期"
    else:
        verdict, reason = Verdict.INCONCLUSIVE, "部分 ε 的普查不满足相对稠密"
    return MembershipVerdict(space, verdict, censuses, settings.tolerance, reason)


def ap_test(f: AnalyticSignal, eps_schedule: Optional[Sequence[float]] = None,
            settings: Optional[Settings] = None) -> MembershipVerdict:
    """Bohr 意义下的概周期检验：ε 序列中每个 ε 的普查都相对稠密。"""
    settings = resolve_settings(settings)
    schedule = sorted(eps_schedule or DEFAULT_EPS_SCHEDULE, reverse=True)
    censuses = [epsilon_periods(f, eps, settings=settings) for eps in schedule]
    return _ap_verdict(censuses, "AP", settings)


def stepanov_ap_test(f: AnalyticSignal, p: float = 1.0, eps_schedule: Optional[Sequence[float]] = None,
                     settings: Optional[Settings] = None) -> MembershipVerdict:
    """Stepanov 度量下的 Bohr 检验（S^p-a.p.）。"""
    seminorms.check_p(p)
    settings = resolve_settings(settings)
    schedule = sorted(eps_schedule or DEFAULT_EPS_SCHEDULE, reverse=True)
    censuses = [epsilon_periods(f, eps, settings=settings, metric="stepanov", p=p) for eps in schedule]
    return _ap_verdict(censuses, "SpAP", settings)


# ---------------------------------------------------------------------------
# 按序列检验的 a.a. 与 S^p-a.a.
# ---------------------------------------------------------------------------


def continued_fraction_denominators(theta: float, count: int = 13) -> list[int]:
    """θ 连分数渐近分数的分母 q_0 = 1, q_1, ...（取前 count 个）。"""
    denominators = [1]
    x = theta
    a = math.floor(x)
    q_prev, q = 0, 1
    while len(denominators) < count:
        frac = x - a
        if frac < 1e-12:
            break
        x = 1.0 / frac
        a = math.floor(x)
        q_prev, q = q, a * q + q_prev
        denominators.append(q)
    return sorted(set(denominators))


def default_sequence(f: AnalyticSignal, settings: Optional[Settings] = None,
                     length: int = DEFAULT_SEQUENCE_LENGTH) -> list[float]:
    """n·τ₀（τ₀ 为容差下普查到的最小近周期）；没有近周期时取 b_n = n。"""
    settings = resolve_settings(settings)
    census = epsilon_periods(f, settings.tolerance, settings=settings)
    step = census.periods[0] if census.periods else 1.0
    return [step * n for n in range(1, length + 1)]


def _select_subsequence(D: np.ndarray, tolerance: float) -> list[int]:
    """C_i = {j : D[i, j] ≤ tol}，取最大的簇，规模相同时取 i 最大者。"""
    sizes = np.sum(D <= tolerance, axis=1)
    best = max(range(D.shape[0]), key=lambda i: (sizes[i], i))
    return [int(j) for j in np.flatnonzero(D[best] <= tolerance)]


def _sequence_verdict(D: np.ndarray, backward: Callable[[list[int]], float], sequence: np.ndarray,
                      settings: Settings, metric: str) -> tuple[SequenceTestResult, list[int]]:
    tolerance = settings.tolerance
    members = _select_subsequence(D, tolerance)
    if len(members) < settings.min_subsequence:
        result = SequenceTestResult(Verdict.INCONCLUSIVE, None, math.inf, math.inf, sequence.tolist(), members,
                                    metric, "前缀内没有收敛子序列")
        return result, members
    last = members[-1]
    forward = float(np.max(D[members, last]))
    back = backward(members)
    ok = forward <= tolerance and back <= tolerance
    result = SequenceTestResult(Verdict.MEMBER if ok else Verdict.INCONCLUSIVE, None, forward, back,
                                sequence.tolist(), members, metric,
                                "" if ok else "子序列的正向或反向误差超过容差")
    return result, members


def aa_test(f: AnalyticSignal, sequence: Optional[Sequence[float]] = None,
            settings: Optional[Settings] = None) -> SequenceTestResult:
    """
    逐点 a.a. 检验：在固定 t 网格上选出两两差距 ≤ tol 的最大子序列，
    g = f(· + b_last)，正向误差为子序列到 g 的最大差距，反向误差为 sup‖g(t - b_j) - f(t)‖。
    """
    settings = resolve_settings(settings)
    b = np.asarray(default_sequence(f, settings) if sequence is None else sequence, dtype=float)
    t = np.linspace(0.0, settings.aa_t_span, settings.aa_t_points)
    values = np.stack([f(t + shift) for shift in b])
    D = np.max(np.linalg.norm(values[:, None] - values[None, :], axis=3), axis=2)

    def backward(members):
        last = b[members[-1]]
        base = f(t)
        return max(float(np.max(np.linalg.norm(f(t - b[j] + last) - base, axis=1))) for j in members)

    result, members = _sequence_verdict(D, backward, b, settings, "sup")
    if len(members) >= settings.min_subsequence:
        result.limit = GridFunction(0.0, float(t[1] - t[0]), values[members[-1]])
    return result


def _stepanov_distance(f: AnalyticSignal, a: float, b: float, starts: np.ndarray, p: float,
                       settings: Settings) -> float:
    """max_x [∫_x^{x+1} ‖f(a+s) - f(b+s)‖^p ds]^{1/p}，x 取 starts；跳跃点插入断点。"""
    upper = float(starts[-1]) + 1.0

    def integrand(s):
        return np.linalg.norm(f(a + s) - f(b + s), axis=1) ** p

    anchors = np.concatenate([
        f.breakpoints_between(a, a + upper) - a,
        f.breakpoints_between(b, b + upper) - b,
        starts, starts + 1.0,
    ])
    breaks = zoned_breaks(0.0, upper, 0.0, upper, settings.panel_fraction, settings.panel_fraction, anchors)
    table = CumulativeIntegral(integrand, breaks, settings.quad_order)
    means = np.maximum(table.between(starts, starts + 1.0), 0.0)
    return float(np.max(means) ** (1.0 / p))


def sp_aa_test(f: AnalyticSignal, p: float = 1.0, sequence: Optional[Sequence[float]] = None,
               settings: Optional[Settings] = None) -> MembershipVerdict:
    """
    S^p-a.a. 检验：对 Stepanov 提升做 aa_test，差距取单位窗 L^p 距离。

    序列上的平移在 S^p 范数下无界时判为 non-member（S^p-a.a. 函数必为 S^p 有界）。
    """
    seminorms.check_p(p)
    settings = resolve_settings(settings)
    b = np.asarray(default_sequence(f, settings) if sequence is None else sequence, dtype=float)
    starts = np.arange(0.0, settings.aa_t_span + settings.sp_window_step / 2, settings.sp_window_step)

    norms = np.array([seminorms.stepanov_window_norms(translate(f, -shift), p, np.zeros(1), settings)[0]
                      for shift in b])
    if norms.size >= 3 and np.all(np.diff(norms[-3:]) > 0) and norms[-1] > 2.0 * norms[0] + settings.tolerance:
        return MembershipVerdict("SpAA", Verdict.NON_MEMBER, {"window_norms": norms.tolist()},
                                 settings.tolerance, "序列平移的单位窗范数无界增长", b.tolist())

    n = b.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = _stepanov_distance(f, b[i], b[j], starts, p, settings)

    def backward(members):
        last = b[members[-1]]
        return max(_stepanov_distance(f, last - b[j], 0.0, starts, p, settings) for j in members)

    result, members = _sequence_verdict(D, backward, b, settings, "stepanov")
    if len(members) >= settings.min_subsequence:
        result.limit = sample(translate(f, -b[members[-1]]), (0.0, settings.aa_t_span + 1.0),
                              (settings.aa_t_span + 1.0) / (settings.aa_t_points - 1))
    return MembershipVerdict("SpAA", result.verdict, result, settings.tolerance, result.reason, b.tolist())


# ---------------------------------------------------------------------------
# 遍历分量与伪空间
# ---------------------------------------------------------------------------


def verdict_from_estimate(space: str, estimate: LimitEstimate, settings: Settings) -> MembershipVerdict:
    """消失 → member；收敛到正值 → non-member；其余 inconclusive。"""
    if estimate.vanishing and estimate.converged:
        return MembershipVerdict(space, Verdict.MEMBER, estimate, settings.tolerance, "泛函消失")
    if estimate.converged and estimate.extrapolated > settings.tolerance:
        return MembershipVerdict(space, Verdict.NON_MEMBER, estimate, settings.tolerance,
                                 f"泛函收敛到 {estimate.extrapolated:.6g} > 容差")
    if estimate.converged and estimate.exponent > settings.decay_exponent:
        return MembershipVerdict(space, Verdict.INCONCLUSIVE, estimate, settings.tolerance,
                                 f"末值已低于容差但衰减指数 {estimate.exponent:.3g} 过缓")
    return MembershipVerdict(space, Verdict.INCONCLUSIVE, estimate, settings.tolerance, "阶梯未收敛")


def weyl_vanishing_test(q: AnalyticSignal, p: float = 1.0, settings: Optional[Settings] = None) -> MembershipVerdict:
    """[0, ∞) 上 W^p₀：lim_t lim_l sup_{x≥t} 窗口均值为 0。"""
    settings = resolve_settings(settings)
    return verdict_from_estimate("Wp0", seminorms.weyl_vanishing_limit(q, p, settings), settings)


def equi_weyl_vanishing_test(q: AnalyticSignal, p: float = 1.0,
                             settings: Optional[Settings] = None) -> MembershipVerdict:
    """[0, ∞) 上 e-W^p₀：lim_l sup_{x≥0} 窗口均值为 0。"""
    settings = resolve_settings(settings)
    return verdict_from_estimate("eWp0", seminorms.equi_weyl_limit(q, p, settings), settings)


def _single_space(f: AnalyticSignal, space: str, rho1: Weight, rho2: Weight, p: float,
                  sequence: Optional[Sequence[float]], eps_schedule, settings: Settings) -> MembershipVerdict:
    if space == "AP":
        return ap_test(f, eps_schedule, settings)
    if space == "SpAP":
        return stepanov_ap_test(f, p, eps_schedule, settings)
    if space == "AA":
        result = aa_test(f, sequence, settings)
        return MembershipVerdict("AA", result.verdict, result, settings.tolerance, result.reason, result.sequence)
    if space == "SpAA":
        return sp_aa_test(f, p, sequence, settings)
    if space == "PAP0":
        return verdict_from_estimate(space, seminorms.weighted_ergodic_limit(f, rho1, rho2, settings), settings)
    if space == "SpWPAA0":
        return verdict_from_estimate(space, seminorms.stepanov_ergodic(f, rho1, rho2, p, settings), settings)
    if space == "WpWPAA0":
        return verdict_from_estimate(space, seminorms.weyl_ergodic(f, rho1, rho2, p, settings), settings)
    if space == "BpWPAA0":
        return verdict_from_estimate(space, seminorms.besicovitch_ergodic(f, rho1, rho2, p, settings), settings)
    if space == "eWp0":
        return equi_weyl_vanishing_test(f, p, settings)
    if space == "Wp0":
        return weyl_vanishing_test(f, p, settings)
    raise EstimatorError(f"未知的函数空间: {space}")


def _split_residual(f: AnalyticSignal, g: AnalyticSignal, q: AnalyticSignal) -> float:
    t = np.linspace(-16.0, 16.0, 257)
    return float(np.max(np.linalg.norm(f(t) - g(t) - q(t), axis=1)))


def membership(f: AnalyticSignal, space: str, split: Optional[tuple[AnalyticSignal, AnalyticSignal]] = None,
               rho1: Optional[Weight] = None, rho2: Optional[Weight] = None, p: float = 1.0,
               sequence: Optional[Sequence[float]] = None, eps_schedule: Optional[Sequence[float]] = None,
               settings: Optional[Settings] = None) -> MembershipVerdict:
    """
    f 是否属于 space。

    单空间直接判定；伪空间（WPAA、SpWPAA、WpWPAA、BpWPAA 等）要求声明分解 f = g + q，
    结论为 (g 的回归检验) ∧ (q 的遍历泛函消失)，从不搜索分解。
    """
    settings = resolve_settings(settings)
    rho1 = rho1 or Weight.constant()
    rho2 = rho2 or Weight.constant()
    if space in SPACES:
        return _single_space(f, space, rho1, rho2, p, sequence, eps_schedule, settings)
    if space not in PSEUDO_SPACES:
        raise EstimatorError(f"未知的函数空间: {space}")
    if split is None:
        return MembershipVerdict(space, Verdict.INCONCLUSIVE, None, settings.tolerance,
                                 "伪空间需要声明分解 f = g + q（分解不唯一，不做搜索）")
    g, q = split
    residual = _split_residual(f, g, q)
    if residual > 1e-9 * (1.0 + f.bound() if math.isfinite(f.bound()) else 1.0):
        return MembershipVerdict(space, Verdict.INCONCLUSIVE, {"split_residual": residual}, settings.tolerance,
                                 "声明的分解 g + q 与 f 不一致")

    recurrent_space, ergodic_space = PSEUDO_SPACES[space]
    recurrent = _single_space(g, recurrent_space, rho1, rho2, p, sequence, eps_schedule, settings)
    ergodic = _single_space(q, ergodic_space, rho1, rho2, p, sequence, eps_schedule, settings)
    if recurrent.is_member and ergodic.is_member:
        verdict, reason = Verdict.MEMBER, f"g ∈ {recurrent_space} 且 q ∈ {ergodic_space}"
    else:
        verdict = Verdict.INCONCLUSIVE
        reason = f"g: {recurrent.verdict.value}, q: {ergodic.verdict.value}（分解不唯一，不能据此否定）"
    evidence = {"recurrent": recurrent, "ergodic": ergodic, "weights": [rho1.label, rho2.label], "p": p}
    return MembershipVerdict(space, verdict, evidence, settings.tolerance, reason, recurrent.sequence_tested)


# ---------------------------------------------------------------------------
# 命题演示
# ---------------------------------------------------------------------------


def verify_weyl_extension(q: AnalyticSignal, p: float = 1.0, settings: Optional[Settings] = None) -> PropositionReport:
    """q ∈ W^p₀([0,∞)) ⇒ 零延拓 q_e ∈ W^pWPAA₀（单位权）。"""
    settings = resolve_settings(settings)
    report = PropositionReport("weyl-extension")
    pre = weyl_vanishing_test(q, p, settings)
    report.add_hypothesis("q_in_Wp0", _verdict_of(pre), evidence=pre)
    if pre.is_member:
        post = membership(extend_by_zero(q), "WpWPAA0", p=p, settings=settings)
        report.add_check("extension_in_WpWPAA0", _verdict_of(post), evidence=post)
    else:
        report.notes.append(f"前提检验结果为 {pre.verdict.value}，未运行结论检验")
    return report.resolve()


def dominator_ladder(rho2: Weight, s: float, settings: Settings) -> list[tuple[float, float]]:
    """嵌套扫描上 log[ρ₂(t-s)/ρ₂(t)] 的上确界阶梯。"""
    return log_sup_ladder(lambda t: rho2.log_value(t - s) - rho2.log_value(t), settings)


def boundary_ratio(rho1: Weight, rho2: Weight, s: float, settings: Settings) -> LimitEstimate:
    """(|∫_{-T-s}^{-T} ρ₂| + |∫_T^{T-s} ρ₂|) / ∫_{-T}^{T} ρ₁ 的 T 阶梯（须趋于 0）。"""
    T = settings.ladder()
    with np.errstate(over="ignore", invalid="ignore"):
        numerator = np.abs(rho2.mass_between(-T - s, -T)) + np.abs(rho2.mass_between(T, T - s))
        ratios = numerator / np.asarray(rho1.mass(T), dtype=float)
    return extrapolate_value(T, ratios, settings)


def translation_invariance_check(rho1: Weight, rho2: Weight, s_samples: Optional[Sequence[float]] = None,
                                 dominator: Optional[Callable[[float], float]] = None,
                                 settings: Optional[Settings] = None) -> PropositionReport:
    """
    PAP₀(ρ₁, ρ₂) 平移不变的充分条件：对每个 s，边界质量比 → 0，且存在有限 g(s) 使
    ρ₂(t - s) ≤ g(s) ρ₂(t)。g(s) 取扫描上确界；给出 dominator 时同时核对它。
    """
    settings = resolve_settings(settings)
    samples = tuple(settings.translation_shifts if s_samples is None else s_samples)
    report = PropositionReport("translation-invariance")
    for s in samples:
        s = float(s)
        ratio = boundary_ratio(rho1, rho2, s, settings)
        report.add_check(f"boundary_ratio[s={s:g}]", bool(ratio.vanishing), s=s, estimate=ratio)

        ladder = dominator_ladder(rho2, s, settings)
        finite = ladder_stabilized(ladder)
        found = math.exp(ladder[-1][1]) if finite and ladder[-1][1] < 700 else math.inf
        detail = {"s": s, "g": found, "ladder": [[x, v] for x, v in ladder], "scan_step": SCAN_STEP}
        passed = finite
        if dominator is not None and finite:
            bound = float(dominator(s))
            detail["declared_bound"] = bound
            passed = found <= bound * (1.0 + 1e-9)
        report.add_check(f"dominator[s={s:g}]", passed, **detail)
    return report.resolve()


def kernel_l1(g: AnalyticSignal, settings: Settings) -> tuple[float, float]:
    """
    ∫|g| 以及满足尾部质量 ≤ kernel_tail_tolerance 的截断长度 L。

    截断长度超过 inner_reach 时抛出 TailBoundError。
    """
    reach = settings.inner_reach()
    breaks = zoned_breaks(-reach, reach, -64.0, 64.0, settings.panel_fraction / 2, settings.far_panel,
                          anchors=g.breakpoints())
    table = CumulativeIntegral(g.norm, breaks, settings.quad_order)
    total = float(table(reach) - table(-reach))
    half = float(table(reach / 2) - table(-reach / 2))
    if abs(total - half) > settings.tolerance * max(1.0, total):
        raise TailBoundError(f"核的 L¹ 截断残差 {abs(total - half):.3g} 超过容差", required_length=None)
    length = 1.0
    while length < reach:
        inside = float(table(length) - table(-length))
        if total - inside <= settings.kernel_tail_tolerance * max(1.0, total):
            return total, length
        length *= 2.0
    raise TailBoundError("核的尾部质量在积分范围内未降到容差以下", required_length=reach)


def convolve_with_kernel(g: AnalyticSignal, q: AnalyticSignal, reach: float,
                         settings: Settings) -> AnalyticSignal:
    """(g∗q)(t) = ∫ g(r) q(t - r) dr 在 [-reach, reach] 上的乘积积分表格。"""
    _, length = kernel_l1(g, settings)
    step = settings.convolution_step
    lags = int(math.ceil(length / step))
    weights = product_weights(lambda tau: g(tau)[:, 0], -lags, lags, step, order=8)
    count = int(math.ceil(2.0 * reach / step)) + 1
    origin = -reach - lags * step
    grid = origin + step * np.arange(count + 2 * lags)
    values = grid_convolution(weights, q(grid), lag_lower=-lags)
    interior = values[lags:lags + count]
    table = TablePart(origin=-reach, step=step, values=interior)
    return AnalyticSignal((table,))


def convolution_invariance_demo(q: AnalyticSignal, g: AnalyticSignal, rho1: Optional[Weight] = None,
                                rho2: Optional[Weight] = None, q_member: Optional[bool] = None,
                                settings: Optional[Settings] = None) -> PropositionReport:
    """
    q S¹ 有界、g ∈ L¹、q ∈ B¹WPAA₀ ⇒ g∗q ∈ B¹WPAA₀，并逐级核对
    泛函(g∗q) ≤ ‖g‖_{L¹} · 泛函(q)。
    """
    settings = resolve_settings(settings)
    rho1 = rho1 or Weight.constant()
    rho2 = rho2 or Weight.constant()
    report = PropositionReport("conv-invariance")

    q_norm = seminorms.stepanov_norm(q, 1.0, settings)
    report.add_hypothesis("q_S1_bounded", math.isfinite(q_norm), stepanov_norm=q_norm)
    g_l1, length = kernel_l1(g, settings)
    report.add_hypothesis("g_in_L1", math.isfinite(g_l1), l1_norm=g_l1, truncation=length)

    q_estimate = seminorms.besicovitch_ergodic(q, rho1, rho2, 1.0, settings)
    if q_member is None:
        q_member = _verdict_of(verdict_from_estimate("BpWPAA0", q_estimate, settings))
        report.add_hypothesis("q_in_B1WPAA0", q_member, evidence=q_estimate)
    else:
        report.add_hypothesis("q_in_B1WPAA0", q_member, declared=True)

    if q.is_zero():
        h = q
    else:
        h = convolve_with_kernel(g, q, settings.inner_reach(), settings)
    h_estimate = seminorms.besicovitch_ergodic(h, rho1, rho2, 1.0, settings)
    h_verdict = verdict_from_estimate("BpWPAA0", h_estimate, settings)
    report.add_check("convolution_in_B1WPAA0", _verdict_of(h_verdict), evidence=h_estimate)

    bound = g_l1 * q_estimate.values * (1.0 + settings.bound_slack) + settings.zero_floor
    ok = bool(np.all(h_estimate.values <= bound))
    report.add_check("functional_bound", ok, lhs=h_estimate.values, rhs=bound, l1_norm=g_l1)
    return report.resolve()


def weight_conditions_report(rho1: Weight, rho2: Weight, settings: Optional[Settings] = None) -> dict:
    """两个权函数的类别检查、等价性与 V_∞ 条件汇总。"""
    settings = resolve_settings(settings)
    return {
        "rho1": weight_classes(rho1, settings).to_dict(),
        "rho2": weight_classes(rho2, settings).to_dict(),
        "equivalent": weights_equivalent(rho1, rho2, settings),
        "v_infinity": v_infinity_check(rho1, rho2, settings.translation_shifts, settings),
    }
