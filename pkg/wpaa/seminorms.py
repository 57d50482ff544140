"""
半范数与遍历泛函估计器。

T→∞ 与 l→∞ 的极限都在几何阶梯 base·2^k 上取样再外推：
  - 内层极限（窗口均值对 l）：尾部全为零、衰减到零或逐级对数斜率 ≤ -inner_decay_floor
    时极限为 0，否则按 tail-mean / tail-max / tail-min / richardson 取值；
  - 外层 T 阶梯的"消失"判定：末值 ≤ tolerance 且拟合指数 ≤ decay_exponent。
sup_x 一律在扫描网格上取（步长 l·scan_step_fraction），窗口积分来自累积积分表。
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from wpaa.config_loader import Settings, resolve_settings
from wpaa.quadrature import CumulativeIntegral, map_nodes, uniform_breaks, zoned_breaks
from wpaa.signals import AnalyticSignal, Weight

logger = logging.getLogger(__name__)


class EstimatorError(ValueError):
    """估计器参数不合法（p < 1、l ≤ 0、权质量为零等）。"""


class Family(str, Enum):
    STEPANOV = "stepanov"
    WEYL = "weyl"
    BESICOVITCH = "besicovitch"


class Side(str, Enum):
    TWO_SIDED = "two-sided"
    ONE_SIDED = "one-sided"


@dataclass
class LimitEstimate:
    """阶梯取样的极限估计，附外推值、收敛标记与诊断。"""

    ladder: list
    extrapolated: float
    method: str
    converged: bool
    residual: float
    exponent: float = math.nan
    vanishing: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ladder = [(float(p), float(v)) for p, v in self.ladder]
        params = [p for p, _ in self.ladder]
        if any(b <= a for a, b in zip(params, params[1:])):
            raise EstimatorError("阶梯参数必须严格递增")
        self.extrapolated = float(self.extrapolated)
        self.residual = float(self.residual) if math.isfinite(self.residual) else math.inf
        self.residual = max(self.residual, 0.0)
        if not math.isfinite(self.extrapolated):
            self.converged = False
            self.vanishing = False

    @property
    def parameters(self) -> np.ndarray:
        return np.asarray([p for p, _ in self.ladder])

    @property
    def values(self) -> np.ndarray:
        return np.asarray([v for _, v in self.ladder])

    def to_dict(self) -> dict:
        return {
            "ladder": [[p, _json_float(v)] for p, v in self.ladder],
            "extrapolated": _json_float(self.extrapolated),
            "method": self.method,
            "converged": self.converged,
            "residual": _json_float(self.residual),
            "exponent": _json_float(self.exponent),
            "vanishing": self.vanishing,
            "diagnostics": json_safe(self.diagnostics),
        }

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file)
            writer.writerow(["parameter", "value"])
            for parameter, value in self.ladder:
                writer.writerow([repr(parameter), repr(value)])


def _json_float(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def json_safe(value):
    """递归转换为可 JSON 序列化的对象；非有限浮点数记为 None。"""
    if hasattr(value, "to_dict"):
        return json_safe(value.to_dict())
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _json_float(value)
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass(frozen=True)
class SeminormSpec:
    """p、族（Stepanov(l) / Weyl / Besicovitch）与取向。"""

    p: float = 1.0
    family: Family = Family.STEPANOV
    side: Side = Side.TWO_SIDED
    length: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "side", Side(self.side))
        check_p(self.p)
        if self.family is Family.STEPANOV and not self.length > 0:
            raise EstimatorError(f"Stepanov 窗口长度必须为正: {self.length}")

    def evaluate(self, f: AnalyticSignal, g: Optional[AnalyticSignal] = None,
                 settings: Optional[Settings] = None):
        if self.family is Family.STEPANOV:
            return stepanov_metric(f, g, self.length, self.p, settings, side=self.side)
        if self.family is Family.WEYL:
            return weyl_distance(f, g, self.p, settings)
        diff = f if g is None else f - g
        return besicovitch_upper(diff, self.p, 0.0, settings)


def check_p(p: float) -> None:
    if not (math.isfinite(p) and p >= 1.0):
        raise EstimatorError(f"需要 1 ≤ p < ∞，收到 p={p}")


# ---------------------------------------------------------------------------
# 外推
# ---------------------------------------------------------------------------


def fit_decay_exponent(params: np.ndarray, values: np.ndarray, zero_floor: float = 1e-13) -> float:
    """log(value) 对 log(parameter) 的最小二乘斜率；尾部全零时为 -inf。"""
    params = np.asarray(params, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        return math.nan
    if np.all(values <= zero_floor):
        return -math.inf
    mask = values > zero_floor
    if np.count_nonzero(mask) < 2:
        return -math.inf
    slope = np.polyfit(np.log(params[mask]), np.log(values[mask]), 1)[0]
    return float(slope)


def _limit_is_zero(tail: np.ndarray, settings: Settings) -> Optional[str]:
    """内层尾部是否判定为趋于 0；返回所用规则名。"""
    floor = settings.zero_floor
    if np.max(tail) <= floor:
        return "zero-tail"
    if tail[-1] <= floor and np.all(np.diff(tail) <= 0):
        return "decay-to-floor"
    if tail.size >= 3 and np.all(tail > 0):
        slopes = np.diff(np.log(tail)) / math.log(2.0)
        if np.all(slopes <= -settings.inner_decay_floor):
            return "power-decay"
    return None


def extrapolate_value(params: Sequence[float], values: Sequence[float], settings: Optional[Settings] = None,
                      mode: str = "limit", power: float = 1.0) -> LimitEstimate:
    """
    l 阶梯（或任意参数阶梯）的极限外推。

    values 为取幂之前的量（窗口均值），结果与阶梯都按 1/power 次幂报告。
    mode: limit（按配置方法）、limsup（tail-max）、liminf（tail-min）。
    """
    settings = resolve_settings(settings)
    params = np.asarray(params, dtype=float)
    values = np.asarray(values, dtype=float)
    ladder = list(zip(params, np.maximum(values, 0.0) ** (1.0 / power)))
    k = min(settings.tail_rungs, values.size)
    tail = values[-k:]
    if not np.all(np.isfinite(tail)):
        return LimitEstimate(ladder, math.nan, "non-finite", False, math.inf,
                             diagnostics={"reason": "阶梯含非有限值"})
    tail = np.maximum(tail, 0.0)
    exponent = fit_decay_exponent(params[-k:], tail, settings.zero_floor) / power

    rule = _limit_is_zero(tail, settings)
    if rule is not None:
        return LimitEstimate(ladder, 0.0, rule, True, float(tail[-1] ** (1.0 / power)),
                             exponent=exponent, vanishing=True)

    method = {"limit": settings.extrapolation_method, "limsup": "tail-max", "liminf": "tail-min"}[mode]
    if method == "tail-mean":
        value = float(np.mean(tail))
        residual = float(np.max(np.abs(tail - value)))
    elif method == "tail-max":
        value = float(np.max(tail))
        residual = float(np.max(tail) - np.min(tail))
    elif method == "tail-min":
        value = float(np.min(tail))
        residual = float(np.max(tail) - np.min(tail))
    else:
        value = float(2.0 * tail[-1] - tail[-2])
        residual = float(abs(tail[-1] - tail[-2]))
        value = max(value, 0.0)

    reported = value ** (1.0 / power)
    # 残差按 1/power 次幂的导数换算到报告尺度
    if value > 0 and power != 1.0:
        residual = residual * reported / (power * value)
    elif power != 1.0:
        residual = residual ** (1.0 / power)
    converged = residual <= settings.tolerance * max(1.0, abs(reported))
    return LimitEstimate(ladder, reported, method, converged, residual, exponent=exponent,
                         vanishing=converged and reported <= settings.tolerance)


def extrapolate_vanishing(params: Sequence[float], values: Sequence[float],
                          settings: Optional[Settings] = None) -> LimitEstimate:
    """T 阶梯的消失判定：末值 ≤ tolerance 且拟合指数 ≤ decay_exponent。"""
    settings = resolve_settings(settings)
    params = np.asarray(params, dtype=float)
    values = np.asarray(values, dtype=float)
    ladder = list(zip(params, values))
    if not np.all(np.isfinite(values)):
        bad = [float(p) for p, v in zip(params, values) if not np.isfinite(v)]
        return LimitEstimate(ladder, math.nan, "non-finite", False, math.inf,
                             diagnostics={"reason": "阶梯含非有限值", "non_finite_at": bad})
    k = min(settings.tail_rungs, values.size)
    tail = np.maximum(values[-k:], 0.0)
    exponent = fit_decay_exponent(params[-k:], tail, settings.zero_floor)
    last = float(tail[-1])
    if last <= settings.tolerance and exponent <= settings.decay_exponent:
        return LimitEstimate(ladder, 0.0, "power-fit", True, last, exponent=exponent, vanishing=True)

    method = settings.extrapolation_method
    if method == "tail-max":
        value, residual = float(np.max(tail)), float(np.ptp(tail))
    elif method == "richardson":
        value, residual = float(max(2.0 * tail[-1] - tail[-2], 0.0)), float(abs(tail[-1] - tail[-2]))
    else:
        value = float(np.mean(tail))
        residual = float(np.max(np.abs(tail - value)))
    converged = residual <= settings.tolerance * max(1.0, abs(value))
    return LimitEstimate(ladder, value, method, converged, residual, exponent=exponent, vanishing=False)


def inner_limits(means: np.ndarray, settings: Settings, mode: str = "limit") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    每行一条内层阶梯（参数逐级翻倍）的向量化外推。

    返回 (极限值, 是否收敛, 是否判为 0)。
    """
    means = np.maximum(np.asarray(means, dtype=float), 0.0)
    k = min(settings.tail_rungs, means.shape[1])
    tail = means[:, -k:]
    floor = settings.zero_floor
    zero = np.max(tail, axis=1) <= floor
    to_floor = (tail[:, -1] <= floor) & np.all(np.diff(tail, axis=1) <= 0, axis=1)
    with np.errstate(divide="ignore"):
        slopes = np.diff(np.log(np.maximum(tail, floor)), axis=1) / math.log(2.0)
    decay = np.all(tail > floor, axis=1) & np.all(slopes <= -settings.inner_decay_floor, axis=1)
    limit_zero = zero | to_floor | decay

    method = {"limit": settings.extrapolation_method, "limsup": "tail-max", "liminf": "tail-min"}[mode]
    if method == "tail-max":
        value = np.max(tail, axis=1)
        residual = np.ptp(tail, axis=1)
    elif method == "tail-min":
        value = np.min(tail, axis=1)
        residual = np.ptp(tail, axis=1)
    elif method == "richardson":
        value = np.maximum(2.0 * tail[:, -1] - tail[:, -2], 0.0)
        residual = np.abs(tail[:, -1] - tail[:, -2])
    else:
        value = np.mean(tail, axis=1)
        residual = np.max(np.abs(tail - value[:, None]), axis=1)
    converged = limit_zero | (residual <= settings.tolerance * np.maximum(1.0, np.abs(value)))
    value = np.where(limit_zero, 0.0, value)
    return value, converged, limit_zero


# ---------------------------------------------------------------------------
# 累积表与窗口均值
# ---------------------------------------------------------------------------


def power_integrand(f: AnalyticSignal, p: float) -> Callable[[np.ndarray], np.ndarray]:
    if p == 1.0:
        return f.norm
    return lambda t: f.norm(t) ** p


def power_table(f: AnalyticSignal, p: float, lower: float, upper: float, settings: Settings,
                fine: Optional[tuple[float, float]] = None, width: Optional[float] = None) -> CumulativeIntegral:
    """∫‖f‖^p 的累积表；fine 区间内面板宽度为 width，区外为 far_panel。"""
    width = settings.panel_fraction if width is None else width
    fine_lower, fine_upper = (lower, upper) if fine is None else fine
    breaks = zoned_breaks(lower, upper, fine_lower, fine_upper, width, max(settings.far_panel, width),
                          anchors=f.breakpoints_between(lower, upper))
    return CumulativeIntegral(power_integrand(f, p), breaks, settings.quad_order)


def window_means(table: CumulativeIntegral, starts: np.ndarray, length) -> np.ndarray:
    """(1/l) ∫_x^{x+l}，逐点截断到非负。"""
    starts = np.asarray(starts, dtype=float)
    length = np.asarray(length, dtype=float)
    return np.maximum(table.between(starts, starts + length), 0.0) / length


def _scan_starts(lower: float, upper: float, step: float) -> np.ndarray:
    count = int(math.floor((upper - lower) / step + 1e-9)) + 1
    return lower + step * np.arange(count)


def _normalizer(rho1: Weight, T, settings: Settings, one_sided: bool = False) -> np.ndarray:
    with np.errstate(over="ignore"):
        mass = np.asarray(rho1.one_sided_mass(T) if one_sided else rho1.mass(T), dtype=float)
    if np.any(mass <= 0):
        raise EstimatorError(f"权函数 {rho1.label} 的质量为零")
    if one_sided or settings.ergodic_normalization == "mean":
        return mass
    return 2.0 * mass


# ---------------------------------------------------------------------------
# Stepanov / Weyl / Besicovitch
# ---------------------------------------------------------------------------


def stepanov_metric(f: AnalyticSignal, g: Optional[AnalyticSignal], l: float, p: float = 1.0,
                    settings: Optional[Settings] = None, side: Union[str, Side] = Side.TWO_SIDED) -> float:
    """D_{S_l}^p[f, g] = sup_x [(1/l) ∫_x^{x+l} ‖f - g‖^p]^{1/p}，x 取扫描网格。"""
    check_p(p)
    if not l > 0:
        raise EstimatorError(f"窗口长度必须为正: {l}")
    settings = resolve_settings(settings)
    diff = f if g is None else f - g
    if diff.is_zero():
        return 0.0
    x_max = settings.scan_x_max
    lower = 0.0 if Side(side) is Side.ONE_SIDED else -x_max
    starts = _scan_starts(lower, x_max, l * settings.scan_step_fraction)
    table = power_table(diff, p, lower, starts[-1] + l, settings,
                        width=min(l, 1.0) * settings.panel_fraction)
    means = window_means(table, starts, l)
    return float(np.max(means) ** (1.0 / p))


def stepanov_norm(f: AnalyticSignal, p: float = 1.0, settings: Optional[Settings] = None,
                  side: Union[str, Side] = Side.TWO_SIDED) -> float:
    """‖f‖_{S^p} = sup_t (∫_t^{t+1} ‖f‖^p)^{1/p}。"""
    return stepanov_metric(f, None, 1.0, p, settings, side)


def stepanov_window_norms(f: AnalyticSignal, p: float, starts: np.ndarray,
                          settings: Optional[Settings] = None) -> np.ndarray:
    """逐个扫描点的单位窗 L^p 均值（不取 sup），用于单调性等逐点性质。"""
    check_p(p)
    settings = resolve_settings(settings)
    starts = np.asarray(starts, dtype=float)
    table = power_table(f, p, float(np.min(starts)), float(np.max(starts)) + 1.0, settings)
    return window_means(table, starts, 1.0) ** (1.0 / p)


def weyl_distance(f: AnalyticSignal, g: Optional[AnalyticSignal], p: float = 1.0,
                  settings: Optional[Settings] = None) -> LimitEstimate:
    """D_W^p[f, g] = lim_{l→∞} D_{S_l}^p[f, g]。"""
    check_p(p)
    settings = resolve_settings(settings)
    diff = f if g is None else f - g
    lengths = settings.ladder()
    if diff.is_zero():
        return extrapolate_value(lengths, np.zeros(lengths.size), settings, power=p)
    x_max = settings.scan_x_max
    table = power_table(diff, p, -x_max, x_max + lengths[-1], settings,
                        fine=(-x_max, x_max + 2.0 * settings.ladder_base))
    sups = []
    for l in lengths:
        starts = _scan_starts(-x_max, x_max, l * settings.scan_step_fraction)
        sups.append(float(np.max(window_means(table, starts, l))))
    estimate = extrapolate_value(lengths, np.asarray(sups), settings, power=p)
    estimate.diagnostics["scan"] = {"x_max": x_max, "step_fraction": settings.scan_step_fraction}
    return estimate


def _symmetric_means(f: AnalyticSignal, p: float, t: float, settings: Settings) -> tuple[np.ndarray, np.ndarray]:
    lengths = settings.ladder()
    reach = lengths[-1]
    table = power_table(f, p, t - reach, t + reach, settings,
                        fine=(t - 2.0 * settings.ladder_base, t + 2.0 * settings.ladder_base))
    means = np.maximum(table(t + lengths) - table(t - lengths), 0.0) / (2.0 * lengths)
    return lengths, means


def besicovitch_upper(f: AnalyticSignal, p: float = 1.0, t: float = 0.0,
                      settings: Optional[Settings] = None) -> LimitEstimate:
    """limsup_{l→∞} [(1/2l) ∫_{t-l}^{t+l} ‖f‖^p]^{1/p}，limsup 取 l 阶梯尾部最大值。"""
    check_p(p)
    settings = resolve_settings(settings)
    lengths, means = _symmetric_means(f, p, t, settings)
    return extrapolate_value(lengths, means, settings, mode="limsup", power=p)


def besicovitch_lower(f: AnalyticSignal, p: float = 1.0, t: float = 0.0,
                      settings: Optional[Settings] = None) -> LimitEstimate:
    """liminf 对应量（尾部最小值）。"""
    check_p(p)
    settings = resolve_settings(settings)
    lengths, means = _symmetric_means(f, p, t, settings)
    return extrapolate_value(lengths, means, settings, mode="liminf", power=p)


# ---------------------------------------------------------------------------
# 加权遍历泛函
# ---------------------------------------------------------------------------


def _weighted_integrand(f: AnalyticSignal, rho2: Weight) -> Callable[[np.ndarray], np.ndarray]:
    def integrand(t):
        with np.errstate(over="ignore", invalid="ignore"):
            return f.norm(t) * rho2(t)
    return integrand


def weighted_ergodic(f: AnalyticSignal, rho1: Weight, rho2: Weight, T: float,
                     settings: Optional[Settings] = None) -> float:
    """(1/ν) ∫_{-T}^{T} ‖f‖ ρ₂，ν 为 ∫ρ₁（mean）或 2∫ρ₁（halved）。"""
    if not T > 0:
        raise EstimatorError(f"T 必须为正: {T}")
    settings = resolve_settings(settings)
    normalizer = float(_normalizer(rho1, T, settings))
    breaks = zoned_breaks(-T, T, -T, T, settings.panel_fraction, settings.panel_fraction,
                          anchors=f.breakpoints())
    table = CumulativeIntegral(_weighted_integrand(f, rho2), breaks, settings.quad_order)
    return float(table(T) / normalizer)


def one_sided_ergodic(f: AnalyticSignal, rho1: Weight, rho2: Weight, T: float,
                      settings: Optional[Settings] = None) -> float:
    """(1/∫_0^T ρ₁) ∫_0^T ‖f‖ ρ₂。"""
    if not T > 0:
        raise EstimatorError(f"T 必须为正: {T}")
    settings = resolve_settings(settings)
    normalizer = float(_normalizer(rho1, T, settings, one_sided=True))
    breaks = zoned_breaks(0.0, T, 0.0, T, settings.panel_fraction, settings.panel_fraction,
                          anchors=f.breakpoints())
    table = CumulativeIntegral(_weighted_integrand(f, rho2), breaks, settings.quad_order)
    return float(table(T) / normalizer)


def _ergodic_ladder(integrand: Callable[[np.ndarray], np.ndarray], anchors, rho1: Weight,
                    settings: Settings, one_sided: bool) -> LimitEstimate:
    ladder = settings.ladder()
    t_max = settings.ladder_max
    lower = 0.0 if one_sided else -t_max
    breaks = zoned_breaks(lower, t_max, lower, t_max, settings.panel_fraction, settings.panel_fraction,
                          anchors=anchors)
    table = CumulativeIntegral(integrand, breaks, settings.quad_order)
    numerators = table(ladder) - (table(np.zeros_like(ladder)) if one_sided else table(-ladder))
    with np.errstate(invalid="ignore", over="ignore"):
        values = numerators / _normalizer(rho1, ladder, settings, one_sided)
    return extrapolate_vanishing(ladder, values, settings)


def weighted_ergodic_limit(f: AnalyticSignal, rho1: Weight, rho2: Weight,
                           settings: Optional[Settings] = None,
                           side: Union[str, Side] = Side.TWO_SIDED) -> LimitEstimate:
    """lim_{T→∞} 的加权遍历泛函（PAP₀ 判定依据）。"""
    settings = resolve_settings(settings)
    one_sided = Side(side) is Side.ONE_SIDED
    if f.is_zero():
        ladder = settings.ladder()
        return extrapolate_vanishing(ladder, np.zeros(ladder.size), settings)
    estimate = _ergodic_ladder(_weighted_integrand(f, rho2), f.breakpoints(), rho1, settings, one_sided)
    estimate.diagnostics.update({"weights": [rho1.label, rho2.label],
                                 "normalization": "one-sided" if one_sided else settings.ergodic_normalization})
    flags = f.extrapolation_flags(0.0 if one_sided else -settings.ladder_max, settings.ladder_max)
    if flags:
        estimate.diagnostics["extrapolation_flags"] = flags
    return estimate


def one_sided_ergodic_limit(f: AnalyticSignal, rho1: Weight, rho2: Weight,
                            settings: Optional[Settings] = None) -> LimitEstimate:
    return weighted_ergodic_limit(f, rho1, rho2, settings, side=Side.ONE_SIDED)


def _stepanov_window_function(q: AnalyticSignal, p: float, lower: float, upper: float,
                              settings: Settings) -> Callable[[np.ndarray], np.ndarray]:
    inner = power_table(q, p, lower, upper + 1.0, settings)

    def window(t):
        return window_means(inner, t, 1.0) ** (1.0 / p)
    return window


def stepanov_ergodic(q: AnalyticSignal, rho1: Weight, rho2: Weight, p: float = 1.0,
                     settings: Optional[Settings] = None,
                     side: Union[str, Side] = Side.TWO_SIDED) -> LimitEstimate:
    """(1/ν) ∫_{-T}^{T} [∫_t^{t+1} ‖q‖^p]^{1/p} ρ₂(t) dt 的 T 阶梯。"""
    check_p(p)
    settings = resolve_settings(settings)
    one_sided = Side(side) is Side.ONE_SIDED
    if q.is_zero():
        ladder = settings.ladder()
        return extrapolate_vanishing(ladder, np.zeros(ladder.size), settings)
    lower = 0.0 if one_sided else -settings.ladder_max
    window = _stepanov_window_function(q, p, lower, settings.ladder_max, settings)

    def integrand(t):
        with np.errstate(over="ignore", invalid="ignore"):
            return window(t) * rho2(t)

    anchors = tuple(b - 1.0 for b in q.breakpoints()) + q.breakpoints()
    estimate = _ergodic_ladder(integrand, anchors, rho1, settings, one_sided)
    flags = q.extrapolation_flags(lower, settings.ladder_max + 1.0)
    if flags:
        estimate.diagnostics["extrapolation_flags"] = flags
    return estimate


def stepanov_ergodic_uniform(q_of_y: Callable[[float], AnalyticSignal], y_samples: Sequence[float],
                             rho1: Weight, rho2: Weight, p: float = 1.0,
                             settings: Optional[Settings] = None) -> LimitEstimate:
    """双参数 q(t, y) 的 S^p 遍历泛函，对有界集 y 的样本一致（逐级取最大）。"""
    settings = resolve_settings(settings)
    if not len(y_samples):
        raise EstimatorError("y 样本为空")
    runs = [stepanov_ergodic(q_of_y(y), rho1, rho2, p, settings) for y in y_samples]
    values = np.max(np.vstack([run.values for run in runs]), axis=0)
    estimate = extrapolate_vanishing(settings.ladder(), values, settings)
    worst = int(np.argmax([run.values[-1] for run in runs]))
    estimate.diagnostics["worst_y"] = float(y_samples[worst])
    return estimate


def _nested_ergodic(q: AnalyticSignal, rho1: Weight, rho2: Weight, p: float,
                    settings: Settings, mode: str) -> LimitEstimate:
    check_p(p)
    ladder = settings.ladder()
    if q.is_zero():
        return extrapolate_vanishing(ladder, np.zeros(ladder.size), settings)

    reach = settings.inner_reach()
    fine = settings.ladder_max + 2.0
    table = power_table(q, p, -reach, reach, settings, fine=(-fine, fine))

    nodes, weights, owners = [], [], []
    for index, T in enumerate(ladder):
        breaks = uniform_breaks(-T, T, 2.0 * T / settings.outer_panels)
        x, w = map_nodes(breaks[:-1], breaks[1:], settings.quad_order)
        nodes.append(x.ravel())
        weights.append(w.ravel())
        owners.append(np.full(x.size, index))
    t = np.concatenate(nodes)
    w = np.concatenate(weights)
    owner = np.concatenate(owners)

    # 每个外层节点的内层阶梯 l_k = (|t| + base)·2^k
    lengths = (np.abs(t) + settings.ladder_base)[:, None] * 2.0 ** np.arange(settings.inner_levels)[None, :]
    means = np.maximum(table(t[:, None] + lengths) - table(t[:, None] - lengths), 0.0) / (2.0 * lengths)
    inner, converged, zero = inner_limits(means, settings, mode)
    inner = inner ** (1.0 / p)

    with np.errstate(over="ignore", invalid="ignore"):
        contributions = w * inner * rho2(t)
    numerators = np.bincount(owner, weights=contributions, minlength=ladder.size)
    with np.errstate(over="ignore", invalid="ignore"):
        values = numerators / _normalizer(rho1, ladder, settings)
    estimate = extrapolate_vanishing(ladder, values, settings)

    bad = np.flatnonzero(~converged)
    estimate.diagnostics.update({
        "inner_mode": mode,
        "inner_nodes": int(t.size),
        "inner_zero_nodes": int(np.count_nonzero(zero)),
        "inner_nonconverged": int(bad.size),
    })
    if bad.size:
        estimate.converged = False
        estimate.vanishing = False
        estimate.diagnostics["inner_witnesses"] = [
            {"t": float(t[i]), "means": [float(m) for m in means[i]]} for i in bad[:5]
        ]
        logger.debug("内层极限未收敛的节点: %d / %d", bad.size, t.size)
    flags = q.extrapolation_flags(-reach, reach)
    if flags:
        estimate.diagnostics["extrapolation_flags"] = flags
    return estimate


def weyl_ergodic(q: AnalyticSignal, rho1: Weight, rho2: Weight, p: float = 1.0,
                 settings: Optional[Settings] = None) -> LimitEstimate:
    """内层 Weyl 均值 lim_l (1/2l)∫_{t-l}^{t+l}‖q‖^p，再做加权 T 平均与 T→∞ 外推。"""
    return _nested_ergodic(q, rho1, rho2, p, resolve_settings(settings), "limit")


def besicovitch_ergodic(q: AnalyticSignal, rho1: Weight, rho2: Weight, p: float = 1.0,
                        settings: Optional[Settings] = None) -> LimitEstimate:
    """同 weyl_ergodic，内层取 limsup（尾部最大值）。"""
    return _nested_ergodic(q, rho1, rho2, p, resolve_settings(settings), "limsup")


# ---------------------------------------------------------------------------
# [0, ∞) 上的 Weyl 消失量
# ---------------------------------------------------------------------------


def weyl_vanishing_limit(q: AnalyticSignal, p: float = 1.0, settings: Optional[Settings] = None) -> LimitEstimate:
    """lim_t lim_l sup_{x≥t} [(1/l) ∫_x^{x+l} ‖q‖^p]^{1/p}，x 扫描 [t, t + x_max]。"""
    check_p(p)
    settings = resolve_settings(settings)
    t_ladder = settings.ladder_base * 2.0 ** np.arange(settings.vanishing_t_levels)
    lengths = settings.ladder()
    if q.is_zero():
        return extrapolate_vanishing(t_ladder, np.zeros(t_ladder.size), settings)
    x_max = settings.scan_x_max
    table = power_table(q, p, 0.0, t_ladder[-1] + x_max + lengths[-1], settings)

    inner_values, inner_details = [], []
    for t in t_ladder:
        sups = []
        for l in lengths:
            starts = _scan_starts(t, t + x_max, l * settings.scan_step_fraction)
            sups.append(float(np.max(window_means(table, starts, l))))
        inner = extrapolate_value(lengths, np.asarray(sups), settings, power=p)
        inner_values.append(inner.extrapolated if inner.converged else math.nan)
        inner_details.append({"t": float(t), "method": inner.method, "converged": inner.converged,
                              "value": _json_float(inner.extrapolated)})
    estimate = extrapolate_vanishing(t_ladder, np.asarray(inner_values), settings)
    estimate.diagnostics["inner"] = inner_details
    return estimate


def equi_weyl_limit(q: AnalyticSignal, p: float = 1.0, settings: Optional[Settings] = None) -> LimitEstimate:
    """lim_l sup_{x≥0} [(1/l) ∫_x^{x+l} ‖q‖^p]^{1/p}（e-W^p₀ 判定依据）。"""
    check_p(p)
    settings = resolve_settings(settings)
    lengths = settings.ladder()
    if q.is_zero():
        return extrapolate_value(lengths, np.zeros(lengths.size), settings, power=p)
    x_max = settings.scan_x_max
    table = power_table(q, p, 0.0, x_max + lengths[-1], settings)
    sups = []
    for l in lengths:
        starts = _scan_starts(0.0, x_max, l * settings.scan_step_fraction)
        sups.append(float(np.max(window_means(table, starts, l))))
    return extrapolate_value(lengths, np.asarray(sups), settings, power=p)
