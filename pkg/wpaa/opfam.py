"""
满足条件 (P) 的算子族。

在有限维模型（负定对称矩阵、对角矩阵、负标量）上实现：
  - 围道积分 T_ν(t) 与 e^{tA} 的对照
  - Wright 函数 Φ_γ（级数 + 指数阻尼积分表示）与 Mittag-Leffler 级数
  - 从属族 T_{γ,ν}、S_γ、P_γ、R_γ、R_γ^θ
  - 分数幂 (−A)^θ
  - 压缩常数 M_n、B_n
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union

import mpmath
import numpy as np
from scipy import linalg, special

from wpaa.config_loader import Settings, resolve_settings
from wpaa.quadrature import (
    grid_convolution,
    map_nodes,
    product_weights,
    uniform_breaks,
)

logger = logging.getLogger(__name__)

# 级数允许的最大项（超过则抵消损失超过五位有效数字）
SERIES_CANCELLATION = 1e5
# 可对角化判据
EIGEN_CONDITION_LIMIT = 1e10
# 条件 (P) 采样：向右平移量与 |η| 的对数网格
CONDITION_P_SHIFTS = (0.0, 0.25, 1.0, 4.0, 16.0, 64.0)
CONDITION_P_ETA = np.concatenate([[0.0], np.logspace(-2, 4, 241)])
# B_n 的对数变量积分区间
KERNEL_LOG_RANGE = (1e-12, 1e8)
KERNEL_LOG_PANEL = 0.5
# 阻尼积分在 φ = 0, π 附近的几何加密
GRADING_NEAR_ENDS = 0.15 ** np.arange(1, 9)

LipschitzSpec = Union[float, Callable[[np.ndarray], np.ndarray]]


class OperatorModelError(ValueError):
    """算子模型超出支持的类别或参数不合法。"""


class SpecialFunctionError(RuntimeError):
    """特殊函数求值不收敛，或尾部残差超过容差。"""


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise OperatorModelError(f"γ 必须在 (0, 1) 内: {gamma}")
    return gamma


# ---------------------------------------------------------------------------
# 算子模型
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """
    有限维算子 A 与条件 (P) 的常数。

    构造时做特征分解：对称实矩阵用 eigh（正交特征向量），
    其余矩阵用 eig，特征向量条件数过大视为不可对角化。
    """

    matrix: np.ndarray
    c: float = 0.5
    M: float = 4.0
    beta: float = 1.0
    theta: float = 0.0
    label: str = ""
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)
    inverse_vectors: np.ndarray = field(init=False, repr=False)
    normal: bool = field(init=False, repr=False)

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise OperatorModelError(f"A 必须是方阵: shape={matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise OperatorModelError("A 含非有限元素")
        if not (self.c > 0 and self.M > 0):
            raise OperatorModelError(f"c, M 必须为正: c={self.c}, M={self.M}")
        if not 0.0 < self.beta <= 1.0:
            raise OperatorModelError(f"β 必须在 (0, 1] 内: {self.beta}")
        # θ = 0 即恒等幂，不受 θ > β−1 约束
        if self.theta != 0.0 and not self.theta > self.beta - 1.0:
            raise OperatorModelError(f"θ 必须大于 β−1: θ={self.theta}, β={self.beta}")
        if not np.iscomplexobj(matrix):
            matrix = matrix.astype(float)
        if np.isrealobj(matrix) and np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(matrix).max())):
            values, vectors = linalg.eigh(matrix)
            inverse = vectors.T
            normal = True
        else:
            values, vectors = linalg.eig(matrix)
            if np.linalg.cond(vectors) > EIGEN_CONDITION_LIMIT:
                raise OperatorModelError("A 不可对角化（特征向量矩阵病态）")
            inverse = linalg.inv(vectors)
            normal = bool(np.allclose(vectors.conj().T @ vectors, np.eye(matrix.shape[0]), atol=1e-12))
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "eigenvalues", values)
        object.__setattr__(self, "eigenvectors", vectors)
        object.__setattr__(self, "inverse_vectors", inverse)
        object.__setattr__(self, "normal", normal)

    @classmethod
    def scalar(cls, a: float, **kwargs) -> "OperatorModel":
        return cls(np.array([[float(a)]]), **kwargs)

    @classmethod
    def diagonal(cls, values: Sequence[float], **kwargs) -> "OperatorModel":
        return cls(np.diag(np.asarray(values, dtype=float)), **kwargs)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    def require_stable(self) -> None:
        """分数幂与从属族要求谱在左半平面。"""
        if np.any(np.real(self.eigenvalues) >= 0.0):
            raise OperatorModelError(f"A 的谱不在左半平面: {self.eigenvalues}")

    def spectral(self, multipliers: np.ndarray) -> np.ndarray:
        """V diag(m) V⁻¹；multipliers 形状 (d,) 或 (N, d)。"""
        multipliers = np.asarray(multipliers)
        out = np.einsum("ij,...j,jk->...ik", self.eigenvectors, multipliers, self.inverse_vectors)
        if self.is_real:
            scale = max(1.0, float(np.max(np.abs(out)))) if out.size else 1.0
            if np.max(np.abs(np.imag(out)), initial=0.0) <= 1e-12 * scale:
                return np.real(out)
        return out

    def multiplier_norms(self, multipliers: np.ndarray) -> np.ndarray:
        """谱乘子对应算子的 2-范数，multipliers 形状 (N, d)。"""
        multipliers = np.atleast_2d(np.asarray(multipliers))
        if self.normal:
            return np.max(np.abs(multipliers), axis=1)
        return np.linalg.norm(self.spectral(multipliers), ord=2, axis=(-2, -1))

    def semigroup(self, t: float) -> np.ndarray:
        return self.spectral(np.exp(self.eigenvalues * float(t)))

    def to_dict(self) -> dict:
        matrix = self.matrix
        data: dict[str, Any] = {"c": self.c, "M": self.M, "beta": self.beta, "theta": self.theta}
        if self.label:
            data["label"] = self.label
        if self.dim == 1 and self.is_real:
            data["scalar"] = float(matrix[0, 0])
        elif self.is_real and np.array_equal(matrix, np.diag(np.diag(matrix))):
            data["diagonal"] = [float(v) for v in np.diag(matrix)]
        elif self.is_real:
            data["matrix"] = matrix.tolist()
        else:
            data["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in matrix]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorModel":
        if not isinstance(data, dict):
            raise OperatorModelError(f"算子模型必须是映射: {data!r}")
        constants = {key: float(data[key]) for key in ("c", "M", "beta", "theta") if key in data}
        label = str(data.get("label", ""))
        if "scalar" in data:
            return cls.scalar(data["scalar"], label=label, **constants)
        if "diagonal" in data:
            return cls.diagonal(data["diagonal"], label=label, **constants)
        if "poisson" in data:
            spec = data["poisson"] or {}
            return poisson_operator(int(spec.get("n", 16)), float(spec.get("b", 0.0)), label=label, **constants)
        if "matrix" in data:
            raw = np.asarray(data["matrix"], dtype=float)
            matrix = raw[..., 0] + 1j * raw[..., 1] if raw.ndim == 3 else raw
            return cls(matrix, label=label, **constants)
        raise OperatorModelError("算子模型需要 scalar / diagonal / matrix / poisson 之一")


def poisson_operator(n: int, b: float = 0.0, label: str = "", **constants) -> OperatorModel:
    """
    (0, 1) 上 Dirichlet 边界的差分 Laplace 减 b：A_h = Δ_h − b，n 个内点。

    特征对闭式已知：μ_k = −(4/h²) sin²(kπh/2) − b，φ_k(x_i) = √(2h) sin(kπ x_i)。
    """
    if n < 1:
        raise OperatorModelError(f"网格内点数必须为正: {n}")
    if b < 0:
        raise OperatorModelError(f"b 必须非负: {b}")
    h = 1.0 / (n + 1)
    main = np.full(n, -2.0 / h**2 - b)
    off = np.full(n - 1, 1.0 / h**2)
    matrix = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    return OperatorModel(matrix, label=label or f"poisson(n={n}, b={b:g})", **constants)


def poisson_eigenpairs(n: int, b: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """poisson_operator 的闭式特征值（升序）与正交归一特征向量（列）。"""
    h = 1.0 / (n + 1)
    k = np.arange(n, 0, -1)
    values = -(4.0 / h**2) * np.sin(k * np.pi * h / 2.0) ** 2 - b
    x = h * np.arange(1, n + 1)
    vectors = math.sqrt(2.0 * h) * np.sin(np.pi * x[:, None] * k[None, :])
    return values, vectors


# ---------------------------------------------------------------------------
# 条件 (P) 与围道族
# ---------------------------------------------------------------------------


@dataclass
class ConditionPResult:
    passed: bool
    worst_ratio: float
    witness: Optional[complex] = None
    spectrum_witness: Optional[complex] = None
    samples: int = 0

    def to_dict(self) -> dict:
        def pair(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]

        return {
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "witness": pair(self.witness),
            "spectrum_witness": pair(self.spectrum_witness),
            "samples": self.samples,
        }


def sector_points(c: float, eta: np.ndarray = CONDITION_P_ETA, shifts: Sequence[float] = CONDITION_P_SHIFTS) -> np.ndarray:
    """Ψ_c 内的采样点 λ = −c(|η|+1) + δ + iη。"""
    eta = np.concatenate([-eta[::-1], eta])
    shifts = np.asarray(shifts, dtype=float)
    return (-c * (np.abs(eta)[None, :] + 1.0) + shifts[:, None] + 1j * eta[None, :]).ravel()


def check_condition_P(model: OperatorModel, points: Optional[np.ndarray] = None) -> ConditionPResult:
    """在 Ψ 的采样点上检查 ‖(λ−A)⁻¹‖ ≤ M(1+|λ|)^{−β}，返回最坏比值。"""
    c, M, beta = model.c, model.M, model.beta
    for mu in model.eigenvalues:
        if np.real(mu) >= -c * (abs(np.imag(mu)) + 1.0):
            logger.info("条件 (P) 不成立: 特征值 %s 落在 Ψ 内", mu)
            return ConditionPResult(False, math.inf, spectrum_witness=complex(mu))

    lam = sector_points(c) if points is None else np.asarray(points, dtype=complex)
    eye = np.eye(model.dim)
    resolvents = np.linalg.inv(lam[:, None, None] * eye - model.matrix)
    norms = np.linalg.norm(resolvents, ord=2, axis=(1, 2))
    ratios = norms * (1.0 + np.abs(lam)) ** beta / M
    worst = int(np.argmax(ratios))
    passed = bool(ratios[worst] <= 1.0)
    logger.debug("条件 (P): 最坏比值 %.4g @ λ=%s", ratios[worst], lam[worst])
    return ConditionPResult(passed, float(ratios[worst]), witness=complex(lam[worst]), samples=lam.size)


def contour_height(c: float, t: float, nu: float, tail: float) -> float:
    """使 e^{−c(H+1)t}(1+H)^ν 低于 tail 的截断高度。"""
    height = max(-math.log(tail) / (c * t) - 1.0, 1.0)
    if nu > 0:
        height += nu * math.log1p(height) / (c * t)
    return height


def contour_Tnu(model: OperatorModel, nu: float, t: float, settings: Optional[Settings] = None) -> np.ndarray:
    """
    T_ν(t) = (1/2πi) ∫_Γ (−λ)^ν e^{λt} (λ−A)⁻¹ dλ，Γ: λ = −c(|η|+1) + iη 向上。

    |η| ≤ H(t)，面板宽度不超过 e^{iηt} 的四分之一周期，在 η = 0 的折点处分开。
    """
    settings = resolve_settings(settings)
    t = float(t)
    if not t > 0:
        raise OperatorModelError(f"t 必须为正: {t}")
    if nu < 0:
        raise OperatorModelError(f"ν 必须非负: {nu}")
    c = model.c
    height = contour_height(c, t, nu, settings.contour_tail)
    width = min(1.0, math.pi / (2.0 * t))
    breaks = uniform_breaks(0.0, height, width)
    nodes, weights = map_nodes(breaks[:-1], breaks[1:], settings.quad_order)
    eta = nodes.ravel()
    w = weights.ravel()

    eye = np.eye(model.dim)
    total = np.zeros((model.dim, model.dim), dtype=complex)
    for sign in (1.0, -1.0):
        lam = -c * (eta + 1.0) + 1j * sign * eta
        # dλ = (−c + i) dη（上半支）；下半支沿 η 递增方向反向参数化
        dlam = (-c + 1j) if sign > 0 else (c + 1j)
        scalar = w * np.power(-lam, nu) * np.exp(lam * t) * dlam
        for start in range(0, lam.size, 8192):
            chunk = slice(start, start + 8192)
            resolvents = np.linalg.inv(lam[chunk, None, None] * eye - model.matrix)
            total += np.tensordot(scalar[chunk], resolvents, axes=(0, 0))
    result = total / (2j * math.pi)
    if model.is_real:
        return np.real(result)
    return result


def fractional_power(model: OperatorModel, theta: float) -> np.ndarray:
    """(−A)^θ，经特征分解。"""
    if theta == 0:
        return np.eye(model.dim)
    model.require_stable()
    return model.spectral(np.power(-model.eigenvalues.astype(complex), theta))


def y_norm(model: OperatorModel, x: np.ndarray, theta: Optional[float] = None) -> float:
    """‖x‖_Y = ‖(−A)^θ x‖。"""
    theta = model.theta if theta is None else theta
    return float(np.linalg.norm(fractional_power(model, theta) @ np.asarray(x)))


@dataclass
class BoundFit:
    """界 (A) 的拟合见证：M̂ 取比值最大者，另附对数空间最小二乘。"""

    nu: float
    t_grid: list[float]
    norms: list[float]
    ratios: list[float]
    M_hat: float
    log_fit: dict
    holds: bool

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "M_hat": self.M_hat,
            "log_fit": self.log_fit,
            "holds": self.holds,
            "t_grid": self.t_grid,
            "norms": self.norms,
            "ratios": self.ratios,
        }


def fit_bound_A(
    model: OperatorModel,
    nu: float,
    t_grid: Optional[Sequence[float]] = None,
    settings: Optional[Settings] = None,
) -> BoundFit:
    """拟合 ‖T_ν(t)‖ ≤ M̂ e^{−ct} t^{β−ν−1}。"""
    t_grid = np.logspace(-2, 1, 31) if t_grid is None else np.asarray(t_grid, dtype=float)
    c, beta = model.c, model.beta
    norms = np.array([np.linalg.norm(contour_Tnu(model, nu, t, settings), ord=2) for t in t_grid])
    envelope = np.exp(-c * t_grid) * t_grid ** (beta - nu - 1.0)
    ratios = norms / envelope
    M_hat = float(np.max(ratios))

    positive = norms > 0
    log_fit: dict = {}
    if np.count_nonzero(positive) >= 3:
        design = np.column_stack([np.ones(positive.sum()), np.log(t_grid[positive]), -t_grid[positive]])
        coef, *_ = np.linalg.lstsq(design, np.log(norms[positive]), rcond=None)
        log_fit = {"log_M": float(coef[0]), "exponent": float(coef[1]), "rate": float(coef[2])}
    holds = bool(np.isfinite(M_hat) and np.all(norms <= M_hat * envelope * (1.0 + 1e-12)))
    return BoundFit(
        nu=float(nu),
        t_grid=t_grid.tolist(),
        norms=norms.tolist(),
        ratios=ratios.tolist(),
        M_hat=M_hat,
        log_fit=log_fit,
        holds=holds,
    )


def semigroup_check(
    model: OperatorModel,
    times: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    settings: Optional[Settings] = None,
) -> float:
    """max ‖T_0(t)T_0(s) − T_0(t+s)‖（围道求积）。"""
    cache = {}

    def family(t):
        key = round(float(t), 12)
        if key not in cache:
            cache[key] = contour_Tnu(model, 0.0, t, settings)
        return cache[key]

    worst = 0.0
    for t in times:
        for s in times:
            gap = family(t) @ family(s) - family(t + s)
            worst = max(worst, float(np.max(np.abs(gap))))
    return worst


# ---------------------------------------------------------------------------
# Wright 函数与 Mittag-Leffler
# ---------------------------------------------------------------------------


def _wright_series(gamma: float, z: float, settings: Settings) -> tuple[float, bool, float]:
    """级数求和；返回 (值, 是否收敛, 最大项的对数)。"""
    if z == 0.0:
        return float(special.rgamma(1.0 - gamma)), True, float(-special.gammaln(1.0 - gamma))
    n = np.arange(settings.wright_max_terms, dtype=float)
    arg = 1.0 - gamma - gamma * n
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logs = n * math.log(z) - special.gammaln(n + 1.0) - special.gammaln(arg)
        signs = np.where(n % 2 == 0, 1.0, -1.0) * special.gammasgn(arg)
        terms = np.where(np.isfinite(logs), signs * np.exp(logs), 0.0)
    logs = np.where(np.isfinite(logs), logs, -np.inf)
    peak = int(np.argmax(logs))
    partial = np.abs(np.cumsum(terms)) + 1e-300
    with np.errstate(divide="ignore"):
        small = logs < math.log(settings.wright_tail) + np.log(partial)
    # 峰值之后连续几项都足够小才算收敛
    run = np.convolve(small.astype(int), np.ones(4, dtype=int), mode="valid") == 4
    run[: max(peak, 1)] = False
    hits = np.flatnonzero(run)
    if hits.size == 0:
        return float(math.fsum(terms)), False, float(logs[peak])
    stop = int(hits[0]) + 4
    return float(math.fsum(terms[:stop])), True, float(logs[peak])


def _kanter_log(gamma: float, phi: np.ndarray) -> np.ndarray:
    """log K(φ)，K = (sin γφ / sin φ)^{1/(1−γ)} · sin((1−γ)φ) / sin γφ。"""
    sg = np.log(np.sin(gamma * phi))
    return (sg - np.log(np.sin(phi))) / (1.0 - gamma) + np.log(np.sin((1.0 - gamma) * phi)) - sg


@lru_cache(maxsize=16)
def _kanter_table(gamma: float) -> tuple[np.ndarray, np.ndarray]:
    phi = np.linspace(0.0, math.pi, 4097)[1:-1]
    with np.errstate(divide="ignore"):
        logk = np.maximum.accumulate(_kanter_log(gamma, phi))
    return phi, logk


def _wright_damped(gamma: float, z: float, settings: Settings) -> float:
    """
    指数阻尼积分表示：
    Φ_γ(z) = z^{γ/(1−γ)} / (π(1−γ)) ∫_0^π K(φ) exp(−z^{1/(1−γ)} K(φ)) dφ。

    K 单调递增，被积函数在 z^{1/(1−γ)}K = 1 处取峰，峰附近几何加密。
    """
    if z <= 0.0:
        raise SpecialFunctionError("阻尼表示只适用于 z > 0")
    log_x = math.log(z) / (1.0 - gamma)
    log_pref = gamma * log_x - math.log(math.pi * (1.0 - gamma))
    panel = math.pi / 64.0
    pieces = [np.linspace(0.0, math.pi, 65)]
    pieces.append(panel * GRADING_NEAR_ENDS)
    pieces.append(math.pi - panel * GRADING_NEAR_ENDS)
    phi_table, logk_table = _kanter_table(gamma)
    if logk_table[0] < -log_x < logk_table[-1]:
        peak = float(np.interp(-log_x, logk_table, phi_table))
        offsets = panel * 2.0 ** -np.arange(1, 31)
        pieces.append(np.concatenate([[peak], peak - offsets, peak + offsets]))
    breaks = np.unique(np.clip(np.concatenate(pieces), 0.0, math.pi))
    nodes, weights = map_nodes(breaks[:-1], breaks[1:], settings.quad_order)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logk = _kanter_log(gamma, nodes)
        exponent = log_pref + logk - np.exp(log_x + logk)
        values = np.where(np.isfinite(exponent), np.exp(exponent), 0.0)
    value = float(np.sum(values * weights))
    if not math.isfinite(value):
        raise SpecialFunctionError(f"Φ_{gamma}({z}) 阻尼积分不收敛")
    return value


def wright_phi(gamma: float, z, settings: Optional[Settings] = None):
    """
    Φ_γ(z) = Σ (−z)^n / (n! Γ(1−γ−γn))，z ≥ 0。

    z ≤ z* 且级数收敛、抵消损失不超过五位时用级数，否则用阻尼积分表示。
    结果截断到非负。
    """
    settings = resolve_settings(settings)
    gamma = _check_gamma(gamma)
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zs < 0) or not np.all(np.isfinite(zs)):
        raise OperatorModelError("Φ_γ 的自变量必须是有限非负数")
    out = np.empty(zs.shape)
    limit = math.log(SERIES_CANCELLATION)
    for index, value in np.ndenumerate(zs):
        series_ok = False
        if value <= settings.wright_switch:
            series, converged, log_max = _wright_series(gamma, float(value), settings)
            series_ok = converged and log_max <= limit
        out[index] = series if series_ok else _wright_damped(gamma, float(value), settings)
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def wright_saddle(gamma: float, z: float) -> float:
    """Φ_γ(z) 的领头鞍点渐近，K(φ) ≈ K0(1 + γφ²/2)。"""
    gamma = _check_gamma(gamma)
    k0 = (1.0 - gamma) * gamma ** (gamma / (1.0 - gamma))
    x = z ** (1.0 / (1.0 - gamma))
    pref = z ** (gamma / (1.0 - gamma)) / (math.pi * (1.0 - gamma))
    return float(pref * k0 * math.exp(-x * k0) * math.sqrt(math.pi / (2.0 * x * gamma * k0)))


def wright_regime_report(gamma: float, settings: Optional[Settings] = None) -> dict:
    """在切换点 z* 处对比级数、阻尼积分与鞍点渐近。"""
    settings = resolve_settings(settings)
    gamma = _check_gamma(gamma)
    z = settings.wright_switch
    series, converged, log_max = _wright_series(gamma, z, settings)
    damped = _wright_damped(gamma, z, settings)
    saddle = wright_saddle(gamma, z)
    return {
        "gamma": gamma,
        "switch_point": z,
        "series": series,
        "series_converged": converged,
        "series_max_term": math.exp(log_max) if log_max < 700 else math.inf,
        "damped": damped,
        "saddle": saddle,
        "series_vs_damped": abs(series - damped),
        "saddle_relative": abs(saddle - damped) / max(abs(damped), 1e-300),
    }


def mittag_leffler(alpha: float, beta: float, z: float, tolerance: float = 1e-17) -> float:
    """E_{α,β}(z) = Σ z^k / Γ(αk+β)，mpmath 任意精度求和（独立对照）。"""
    if alpha <= 0 or beta <= 0:
        raise OperatorModelError(f"α, β 必须为正: α={alpha}, β={beta}")
    z = float(z)
    if z == 0.0:
        return float(mpmath.rgamma(beta))
    # 先用浮点对数估计项的量级，确定截断与精度
    k = np.arange(0, 100000, dtype=float)
    logs = k * math.log(abs(z)) - special.gammaln(alpha * k + beta)
    peak = int(np.argmax(logs))
    below = np.flatnonzero((k > peak) & (logs < math.log(tolerance) - 5.0))
    if below.size == 0:
        raise SpecialFunctionError(f"E_{alpha},{beta}({z}) 级数在 100000 项内不收敛")
    count = int(below[0]) + 1
    digits = 25 + max(0, int(math.ceil(logs[peak] / math.log(10.0))))
    with mpmath.workdps(digits):
        zz = mpmath.mpf(z)
        total = mpmath.fsum(zz**i * mpmath.rgamma(alpha * i + beta) for i in range(count))
        return float(total)


# ---------------------------------------------------------------------------
# 从属族
# ---------------------------------------------------------------------------


def _s_limit(gamma: float) -> float:
    """Φ_γ 的尾部低于 e^{−37} 的截断点。"""
    return 1.1 * ((37.0 / (1.0 - gamma)) ** (1.0 - gamma) / gamma**gamma) + 0.5


@lru_cache(maxsize=16)
def _s_quadrature(gamma: float, settings: Settings) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """s ∈ (0, S_max] 上的节点、权重与 Φ_γ 值（只读）。"""
    s_max = _s_limit(gamma)
    width = min(0.25, s_max / 64.0)
    head = width * 0.5 ** np.arange(40, 0, -1)
    breaks = np.concatenate([[0.0], head, uniform_breaks(width, s_max, width)])
    nodes, weights = map_nodes(breaks[:-1], breaks[1:], settings.quad_order)
    nodes, weights = nodes.ravel(), weights.ravel()
    phi = wright_phi(gamma, nodes, settings)
    for array in (nodes, weights, phi):
        array.setflags(write=False)
    mass = float(np.sum(weights * phi))
    logger.debug("Φ_%g 节点: %d 个, S_max=%.3f, 质量 %.12f", gamma, nodes.size, s_max, mass)
    return nodes, weights, phi


def wright_mass(gamma: float, moment: int = 0, settings: Optional[Settings] = None) -> float:
    """∫ s^moment Φ_γ(s) ds（节点求积）。"""
    nodes, weights, phi = _s_quadrature(_check_gamma(gamma), resolve_settings(settings))
    return float(np.sum(weights * phi * nodes**moment))


def _checked_quadrature(gamma: float, settings: Settings):
    nodes, weights, phi = _s_quadrature(gamma, settings)
    residual = abs(float(np.sum(weights * phi)) - 1.0)
    if residual > settings.tolerance:
        raise SpecialFunctionError(f"Φ_{gamma} 尾部残差 {residual:.3g} 超过容差 {settings.tolerance}")
    return nodes, weights, phi


def subordinated_multipliers(
    model: OperatorModel,
    gamma: float,
    nu: float,
    times,
    theta: float = 0.0,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """
    T_{γ,ν} 的谱乘子：t^{γν} Σ_s w s^ν Φ_γ(s) (−μ)^θ e^{μ s t^γ}，形状 (N, d)。

    θ ≠ 0 时 T_0 换成 T_θ = (−A)^θ e^{·A}。
    """
    settings = resolve_settings(settings)
    gamma = _check_gamma(gamma)
    if not nu > -model.beta:
        raise OperatorModelError(f"ν 必须大于 −β: ν={nu}")
    model.require_stable()
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times <= 0):
        raise OperatorModelError("t 必须为正")
    nodes, weights, phi = _checked_quadrature(gamma, settings)
    density = weights * phi * nodes**nu
    mu = model.eigenvalues
    out = np.empty((times.size, mu.size), dtype=complex)
    tg = times**gamma
    for start in range(0, times.size, 128):
        block = slice(start, start + 128)
        tau = nodes[None, :] * tg[block, None]
        out[block] = np.einsum("s,nsd->nd", density, np.exp(tau[..., None] * mu[None, None, :]))
    out *= (times ** (gamma * nu))[:, None]
    if theta:
        out *= np.power(-mu.astype(complex), theta)[None, :]
    return out


def subordinate(model: OperatorModel, gamma: float, nu: float, t: float, settings: Optional[Settings] = None) -> np.ndarray:
    """T_{γ,ν}(t) = t^{γν} ∫ s^ν Φ_γ(s) T_0(s t^γ) ds。"""
    return model.spectral(subordinated_multipliers(model, gamma, nu, [t], settings=settings)[0])


def S_gamma(model: OperatorModel, gamma: float, t: float, settings: Optional[Settings] = None) -> np.ndarray:
    return subordinate(model, gamma, 0.0, t, settings)


def P_gamma(model: OperatorModel, gamma: float, t: float, settings: Optional[Settings] = None) -> np.ndarray:
    """P_γ(t) = γ T_{γ,1}(t) / t^γ。"""
    return gamma * subordinate(model, gamma, 1.0, t, settings) / float(t) ** gamma


def r_gamma_multipliers(
    model: OperatorModel,
    gamma: float,
    theta: float,
    times,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """R_γ^θ(t) = γ t^{γ−1} ∫ s Φ_γ(s) T_θ(s t^γ) ds 的谱乘子。"""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    base = subordinated_multipliers(model, gamma, 1.0, times, theta=theta, settings=settings)
    return gamma * base * (times ** (-1.0))[:, None]


def r_gamma_kernels(
    model: OperatorModel,
    gamma: float,
    theta: Optional[float],
    t: float,
    settings: Optional[Settings] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(R_γ(t), R_γ^θ(t))；R_γ(t) = t^{γ−1} P_γ(t)。"""
    theta = model.theta if theta is None else theta
    plain = r_gamma_multipliers(model, gamma, 0.0, [t], settings)[0]
    shifted = plain * np.power(-model.eigenvalues.astype(complex), theta) if theta else plain
    return model.spectral(plain), model.spectral(shifted)


def r_gamma_norms(model: OperatorModel, gamma: float, theta: float, times, settings: Optional[Settings] = None) -> np.ndarray:
    return model.multiplier_norms(r_gamma_multipliers(model, gamma, theta, times, settings))


def kernel_norm_table(
    model: OperatorModel,
    gamma: float,
    theta: Optional[float] = None,
    t_grid: Optional[Sequence[float]] = None,
    settings: Optional[Settings] = None,
) -> list[dict]:
    """(t, ‖R_γ(t)‖, ‖R_γ^θ(t)‖) 行。"""
    theta = model.theta if theta is None else theta
    t_grid = np.logspace(-2, 1, 31) if t_grid is None else np.asarray(t_grid, dtype=float)
    plain = r_gamma_norms(model, gamma, 0.0, t_grid, settings)
    shifted = r_gamma_norms(model, gamma, theta, t_grid, settings) if theta else plain
    return [
        {"t": float(t), "R_gamma": float(a), "R_gamma_theta": float(b)}
        for t, a, b in zip(t_grid, plain, shifted)
    ]


def write_kernel_table(rows: list[dict], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["t", "R_gamma", "R_gamma_theta"])
        writer.writeheader()
        writer.writerows(rows)
    logger.info("核范数表已写入: %s", path)
    return path


# ---------------------------------------------------------------------------
# 压缩常数
# ---------------------------------------------------------------------------


def _lipschitz(spec: LipschitzSpec) -> tuple[Optional[float], Optional[Callable[[np.ndarray], np.ndarray]]]:
    """常数返回 (L, None)，可调用对象返回 (None, L)。"""
    if callable(spec):
        return None, spec
    value = float(spec)
    if value < 0 or not math.isfinite(value):
        raise OperatorModelError(f"Lipschitz 常数必须是有限非负数: {value}")
    return value, None


def _lipschitz_values(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    values = np.asarray(func(x), dtype=float).reshape(x.shape)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise OperatorModelError("L_f 表必须有限非负")
    return values


def Mn_constant(
    n: int,
    lipschitz: LipschitzSpec,
    M: float,
    c: float,
    beta: float,
    theta: float,
    settings: Optional[Settings] = None,
) -> float:
    """
    M_n = M^n sup_t ∫…∫ e^{−c(t−x_n)}(t−x_n)^{β−θ−1} Π e^{−c(x_i−x_{i−1})}(x_i−x_{i−1})^{β−θ−1} Π L_f(x_i)。

    常数 L_f 时嵌套积分可分解为 (M L_f Γ(β−θ) c^{θ−β})^n；
    变量 L_f 在均匀网格上逐层做乘积积分与 FFT 卷积，n ≤ 3。
    """
    settings = resolve_settings(settings)
    if n < 1:
        raise OperatorModelError(f"n 必须 ≥ 1: {n}")
    if beta <= theta:
        raise OperatorModelError(f"β ≤ θ 时核在 0 处不可积: β={beta}, θ={theta}")
    if M <= 0 or c <= 0:
        raise OperatorModelError("M, c 必须为正")
    level, func = _lipschitz(lipschitz)
    if func is None:
        return float((M * level * special.gamma(beta - theta) * c ** (theta - beta)) ** n)
    if n > 3:
        raise OperatorModelError("变量 L_f 的嵌套求积只支持 n ≤ 3")

    exponent = beta - theta - 1.0
    step = settings.mn_grid_step
    reach = -math.log(settings.special_tolerance * 1e-4) / c
    lags = int(math.ceil(reach / step))
    scan = settings.sup_scan

    def kernel(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u > 0, np.exp(-c * u) * u**exponent, 0.0)

    weights = product_weights(kernel, 0, lags, step, singular_exponent=exponent)[:, 0]
    start = -scan - n * reach
    x = start + step * np.arange(int(math.ceil((2 * scan + n * reach) / step)) + 1)
    lip = _lipschitz_values(func, x)
    layer = np.ones_like(x)
    for _ in range(n):
        layer = grid_convolution(weights, lip * layer)
    window = x >= -scan
    value = float(M**n * np.max(layer[window]))
    logger.debug("M_%d（变量 L_f）= %.6g", n, value)
    return value


def sum_Mn_check(
    n_max: int,
    lipschitz: LipschitzSpec,
    M: float,
    c: float,
    beta: float,
    theta: float,
    settings: Optional[Settings] = None,
) -> dict:
    """Σ M_n 的部分和；常数 L_f 时为几何级数，比值 < 1 即收敛。"""
    values = [Mn_constant(n, lipschitz, M, c, beta, theta, settings) for n in range(1, n_max + 1)]
    partial = np.cumsum(values).tolist()
    ratios = [values[i + 1] / values[i] for i in range(len(values) - 1) if values[i] > 0]
    if all(v == 0 for v in values):
        summable = True
    elif ratios:
        summable = bool(max(ratios[-2:]) < 1.0)
    else:
        summable = bool(values[0] < 1.0)
    return {
        "M_n": values,
        "partial_sums": partial,
        "ratios": ratios,
        "summable": summable,
        "some_below_one": any(v < 1.0 for v in values),
    }


@dataclass
class KernelIntegral:
    """∫_0^∞ ‖R_γ^θ(u)‖ du 的对数变量求积及端点修正。"""

    total: float
    head_exponent: float
    tail_exponent: float
    nodes: np.ndarray
    weights: np.ndarray
    norms: np.ndarray


def kernel_integral(
    model: OperatorModel,
    gamma: float,
    theta: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> KernelIntegral:
    """u = e^v 换元后在 [1e−12, 1e8] 上做 Gauss–Legendre，两端按幂律补尾。"""
    settings = resolve_settings(settings)
    theta = model.theta if theta is None else theta
    low, high = KERNEL_LOG_RANGE
    breaks = uniform_breaks(math.log(low), math.log(high), KERNEL_LOG_PANEL)
    v, w = map_nodes(breaks[:-1], breaks[1:], settings.quad_order)
    u = np.exp(v.ravel())
    weights = w.ravel() * u
    norms = r_gamma_norms(model, gamma, theta, u, settings)

    edges = np.array([low, 2.0 * low, high / 2.0, high])
    edge_norms = r_gamma_norms(model, gamma, theta, edges, settings)
    with np.errstate(divide="ignore"):
        head_exp = float(np.log(edge_norms[1] / edge_norms[0]) / math.log(2.0))
        tail_exp = float(np.log(edge_norms[3] / edge_norms[2]) / math.log(2.0))
    if not head_exp > -1.0:
        raise OperatorModelError(f"‖R_γ^θ‖ 在 0 处不可积（局部指数 {head_exp:.3f}）")
    head = edge_norms[0] * low / (head_exp + 1.0)
    if edge_norms[3] == 0.0:
        tail = 0.0
    elif tail_exp < -1.0:
        tail = edge_norms[3] * high / (-tail_exp - 1.0)
    else:
        raise OperatorModelError(f"‖R_γ^θ‖ 在无穷远处不可积（局部指数 {tail_exp:.3f}）")
    total = float(np.sum(weights * norms) + head + tail)
    return KernelIntegral(total, head_exp, tail_exp, u, weights, norms)


def Bn_constant(
    n: int,
    lipschitz: LipschitzSpec,
    model: OperatorModel,
    gamma: float,
    theta: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> float:
    """
    B_n = sup_{t≥0} ∫…∫ ‖R_γ^θ(t−x_n)‖ Π ‖R_γ^θ(x_i−x_{i−1})‖ Π L_f(x_i)，n ≤ 2。

    常数 L_f 时为 (L_f ∫‖R_γ^θ‖)^n；变量 L_f 在 t ∈ [0, sup_scan] 上直接嵌套求积。
    """
    settings = resolve_settings(settings)
    if n not in (1, 2):
        raise OperatorModelError(f"B_n 只实现 n ∈ {{1, 2}}: n={n}")
    theta = model.theta if theta is None else theta
    level, func = _lipschitz(lipschitz)
    if level == 0.0:
        return 0.0
    integral = kernel_integral(model, gamma, theta, settings)
    if func is None:
        return float((level * integral.total) ** n)

    u, w, norms = integral.nodes, integral.weights, integral.norms
    kernel_weights = w * norms
    # 端点修正部分按 L_f 的上界计入
    correction = integral.total - float(np.sum(kernel_weights))
    times = np.arange(0.0, settings.sup_scan + 1e-12, 0.25)

    def inner(points: np.ndarray) -> np.ndarray:
        x = points[..., None] - u
        lip = _lipschitz_values(func, x)
        bound = float(np.max(lip)) if lip.size else 0.0
        return lip @ kernel_weights + correction * bound

    if n == 1:
        values = inner(times)
    else:
        x = times[:, None] - u[None, :]
        lip = _lipschitz_values(func, x)
        first = np.stack([inner(row) for row in x])
        values = (lip * first) @ kernel_weights + correction * float(np.max(lip * first))
    return float(np.max(values))
