"""
求积工具：Gauss–Legendre 节点、复合与分级面板、累积积分表、乘积积分权重。

所有估计器共用这里的规则，面板宽度与阶数由 Settings 控制。
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import signal as sp_signal

logger = logging.getLogger(__name__)

# 一次性求值的节点上限，超过则分块
CHUNK_NODES = 1 << 16

GRADING_RATIO = 0.15


class TailBoundError(RuntimeError):
    """截断残差超过容差；required_length 为满足容差所需的截断长度（未知时为 None）。"""

    def __init__(self, message: str, required_length: Optional[float] = None):
        super().__init__(message)
        self.required_length = required_length


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """[-1, 1] 上的 order 点 Gauss–Legendre 节点与权重（只读）。"""
    if order < 1:
        raise ValueError(f"求积阶数必须为正: {order}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def map_nodes(lower, upper, order: int) -> tuple[np.ndarray, np.ndarray]:
    """把标准节点映射到一组面板 [lower_i, upper_i]，返回形状 (面板数, order) 的节点与权重。"""
    ref_nodes, ref_weights = gauss_legendre(order)
    lower = np.atleast_1d(np.asarray(lower, dtype=float))[:, None]
    upper = np.atleast_1d(np.asarray(upper, dtype=float))[:, None]
    half = (upper - lower) / 2.0
    return lower + half * (ref_nodes + 1.0), half * ref_weights


def uniform_breaks(a: float, b: float, max_width: float) -> np.ndarray:
    if not b > a:
        raise ValueError(f"区间为空: [{a}, {b}]")
    count = max(1, int(math.ceil((b - a) / max_width - 1e-12)))
    return np.linspace(a, b, count + 1)


def grading_levels(exponent: float, tolerance: float = 1e-15, ratio: float = GRADING_RATIO) -> int:
    """端点奇性 x^exponent 所需的几何分级层数，使最内层面板的贡献低于 tolerance。"""
    if exponent <= -1.0:
        raise ValueError(f"端点奇性 x^{exponent} 不可积")
    power = max(1.0 + exponent, 1e-3)
    levels = math.ceil(math.log(tolerance) / (power * math.log(ratio)))
    return int(min(max(levels, 4), 400))


def graded_breaks(
    a: float,
    b: float,
    width: float,
    exponent: float = 0.0,
    toward: str = "left",
    ratio: float = GRADING_RATIO,
    levels: Optional[int] = None,
) -> np.ndarray:
    """宽度不超过 width 的均匀面板，并在奇异端点处的首个面板内做几何分级。"""
    breaks = uniform_breaks(a, b, width)
    count = grading_levels(exponent, ratio=ratio) if levels is None else levels
    if toward == "left":
        first = breaks[1] - a
        inner = a + first * ratio ** np.arange(count, 0, -1)
        return np.concatenate([[a], inner, breaks[1:]])
    if toward == "right":
        last = b - breaks[-2]
        inner = b - last * ratio ** np.arange(1, count + 1)
        return np.concatenate([breaks[:-1], inner, [b]])
    raise ValueError(f"toward 只能是 left 或 right: {toward}")


def zoned_breaks(
    lower: float,
    upper: float,
    fine_lower: float,
    fine_upper: float,
    fine_width: float,
    far_width: float,
    anchors: Sequence[float] = (),
) -> np.ndarray:
    """细区 [fine_lower, fine_upper] 用 fine_width，其余用 far_width，并插入已知折点。"""
    fine_lower = max(lower, fine_lower)
    fine_upper = min(upper, fine_upper)
    pieces = []
    if fine_lower > lower:
        pieces.append(uniform_breaks(lower, fine_lower, far_width))
    pieces.append(uniform_breaks(fine_lower, fine_upper, fine_width))
    if upper > fine_upper:
        pieces.append(uniform_breaks(fine_upper, upper, far_width))
    breaks = np.concatenate(pieces)
    anchors = np.asarray(anchors, dtype=float).ravel()
    inside = anchors[np.isfinite(anchors) & (anchors > lower) & (anchors < upper)]
    if inside.size:
        breaks = np.union1d(breaks, inside)
        # 过近的断点会产生退化面板
        keep = np.concatenate([[True], np.diff(breaks) > 1e-12 * max(1.0, upper - lower)])
        keep[-1] = True
        breaks = breaks[keep]
    return np.unique(breaks)


def _evaluate_chunked(integrand: Callable[[np.ndarray], np.ndarray], nodes: np.ndarray) -> np.ndarray:
    flat = nodes.ravel()
    if flat.size <= CHUNK_NODES:
        return np.asarray(integrand(flat), dtype=float).reshape(nodes.shape)
    out = np.empty(flat.size, dtype=float)
    for start in range(0, flat.size, CHUNK_NODES):
        stop = start + CHUNK_NODES
        out[start:stop] = integrand(flat[start:stop])
    return out.reshape(nodes.shape)


def integrate_panels(
    integrand: Callable[[np.ndarray], np.ndarray],
    breaks: np.ndarray,
    order: int = 16,
) -> float:
    """在给定断点上做复合 Gauss–Legendre 求积。"""
    breaks = np.asarray(breaks, dtype=float)
    nodes, weights = map_nodes(breaks[:-1], breaks[1:], order)
    values = _evaluate_chunked(integrand, nodes)
    return float(np.sum(values * weights))


class CumulativeIntegral:
    """
    G(x) = ∫_{a}^{x} F(s) ds 的累积表。

    面板积分做一次前缀和；查询时补上所在面板内 [左断点, x] 的部分积分，
    因而任意窗口积分 G(b) - G(a) 的精度与面板求积一致。
    """

    def __init__(
        self,
        integrand: Callable[[np.ndarray], np.ndarray],
        breaks: np.ndarray,
        order: int = 16,
    ):
        self.integrand = integrand
        self.breaks = np.asarray(breaks, dtype=float)
        if self.breaks.ndim != 1 or self.breaks.size < 2 or np.any(np.diff(self.breaks) <= 0):
            raise ValueError("断点必须严格递增且至少两个")
        self.order = order
        nodes, weights = map_nodes(self.breaks[:-1], self.breaks[1:], order)
        values = _evaluate_chunked(integrand, nodes)
        panel = np.sum(values * weights, axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(panel)])
        logger.debug("累积积分表: %d 个面板, 区间 [%g, %g]", panel.size, self.lower, self.upper)

    @property
    def lower(self) -> float:
        return float(self.breaks[0])

    @property
    def upper(self) -> float:
        return float(self.breaks[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.upper - self.lower
        slack = 1e-12 * max(1.0, span)
        if x.size and (np.min(x) < self.lower - slack or np.max(x) > self.upper + slack):
            raise ValueError(
                f"查询点超出累积表范围 [{self.lower}, {self.upper}]: "
                f"[{np.min(x)}, {np.max(x)}]"
            )
        flat = np.clip(x.ravel(), self.lower, self.upper)
        out = np.empty(flat.size, dtype=float)
        step = max(1, CHUNK_NODES // self.order)
        for start in range(0, flat.size, step):
            chunk = flat[start:start + step]
            index = np.clip(np.searchsorted(self.breaks, chunk, side="right") - 1, 0, self.breaks.size - 2)
            left = self.breaks[index]
            nodes, weights = map_nodes(left, chunk, self.order)
            partial = np.sum(_evaluate_chunked(self.integrand, nodes) * weights, axis=1)
            out[start:start + step] = self.cumulative[index] + partial
        return out.reshape(x.shape)

    def between(self, a, b) -> np.ndarray:
        return self(b) - self(a)


def product_weights(
    kernel: Callable[[np.ndarray], np.ndarray],
    lag_lower: int,
    lag_upper: int,
    step: float,
    order: int = 8,
    singular_exponent: float = 0.0,
) -> np.ndarray:
    """
    分段线性插值下的乘积积分权重。

    对格点滞后 j·step（lag_lower ≤ j ≤ lag_upper）返回
    ω_j = ∫ R(τ) φ_j(τ) dτ，φ_j 为帽函数。kernel 返回 (N,) 或 (N, m)，
    结果形状为 (lag_upper - lag_lower + 1, m)。τ = 0 处的奇性在相邻单元内分级处理。
    """
    if lag_upper <= lag_lower:
        raise ValueError("滞后范围为空")
    cells = np.arange(lag_lower, lag_upper)
    ref_nodes, ref_weights = gauss_legendre(order)
    u = (ref_nodes + 1.0) / 2.0
    wu = ref_weights / 2.0

    tau = (cells[:, None] + u[None, :]) * step
    weight_u = np.broadcast_to(wu, tau.shape)
    singular_cells = []
    if singular_exponent < 0.0:
        singular_cells = [k for k in (0, -1) if lag_lower <= k < lag_upper]

    values = np.asarray(kernel(tau.ravel()), dtype=float)
    channels = 1 if values.ndim == 1 else values.shape[1]
    values = values.reshape(tau.shape + (channels,))
    right = values * (weight_u * u)[..., None]
    left = values * (weight_u * (1.0 - u))[..., None]
    # 奇异单元单独重算
    for cell in singular_cells:
        row = cell - lag_lower
        toward = "left" if cell == 0 else "right"
        breaks = graded_breaks(0.0, 1.0, 1.0, exponent=singular_exponent, toward=toward)
        g_nodes, g_weights = map_nodes(breaks[:-1], breaks[1:], 16)
        g_nodes, g_weights = g_nodes.ravel(), g_weights.ravel()
        cell_values = np.asarray(kernel((cell + g_nodes) * step), dtype=float).reshape(g_nodes.size, channels)
        right[row] = 0.0
        left[row] = 0.0
        right[row, 0] = np.sum(cell_values * (g_weights * g_nodes)[:, None], axis=0)
        left[row, 0] = np.sum(cell_values * (g_weights * (1.0 - g_nodes))[:, None], axis=0)

    weights = np.zeros((lag_upper - lag_lower + 1, channels))
    weights[:-1] += step * left.sum(axis=1)
    weights[1:] += step * right.sum(axis=1)
    return weights


def grid_convolution(weights: np.ndarray, values: np.ndarray, lag_lower: int = 0) -> np.ndarray:
    """
    out[i] = Σ_j ω_j · v[i - j]，j 从 lag_lower 起；格点外的 v 视为 0。

    weights 形状 (J,) 或 (J, m)，values 形状 (N,) 或 (N, m)，按列卷积。
    """
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    squeeze = values.ndim == 1
    if weights.ndim == 1:
        weights = weights[:, None]
    if values.ndim == 1:
        values = values[:, None]
    if weights.shape[1] not in (1, values.shape[1]):
        raise ValueError("权重通道数与数据列数不匹配")
    n = values.shape[0]
    shift = -lag_lower
    out = np.zeros_like(values)
    for column in range(values.shape[1]):
        w = weights[:, column if weights.shape[1] > 1 else 0]
        full = sp_signal.oaconvolve(values[:, column], w, mode="full")
        if shift >= 0:
            out[:, column] = full[shift:shift + n]
        else:
            # 正滞后起点：前 lag_lower 个输出没有贡献
            out[-shift:, column] = full[:n + shift]
    return out[:, 0] if squeeze else out
