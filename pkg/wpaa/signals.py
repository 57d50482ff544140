"""
信号与权函数模型。

AnalyticSignal 是由若干部件组成的闭式项（三角项、指数衰减、符号项、鼓包、
多项式、幂衰减、表格插值），可在任意窗口上采样；估计器通过部件列表做内省，
例如在分解检验中取出已知的遍历分量。Weight 为 ℝ 上的正权函数，质量函数有闭式。
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, ClassVar, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from wpaa.config_loader import resolve_settings

logger = logging.getLogger(__name__)

# 无理频率 θ 的默认值；以 64 位浮点存储，远端时间 t ~ 1e8 处相位误差约 1e-8
SQRT2 = math.sqrt(2.0)

# 求积断点中插入的跳跃点上限
MAX_CROSSINGS = 1_000_000


class SignalError(ValueError):
    """信号、权函数或网格数据不合法。"""


def _as_amplitude(value) -> tuple[float, ...]:
    array = np.atleast_1d(np.asarray(value, dtype=float))
    if array.ndim != 1 or array.size == 0 or not np.all(np.isfinite(array)):
        raise SignalError(f"振幅必须是有限实数或实向量: {value!r}")
    return tuple(float(x) for x in array)


def _times(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float)).ravel()


# ---------------------------------------------------------------------------
# 部件
# ---------------------------------------------------------------------------


class Part:
    """信号部件基类：evaluate(t) 返回形状 (N, d) 的数组。"""

    kind: ClassVar[str] = ""
    amplitude: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.amplitude)

    def profile(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return self.profile(t)[:, None] * np.asarray(self.amplitude)[None, :]

    def bound(self) -> float:
        return float(np.linalg.norm(self.amplitude))

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def crossings(self, lower: float, upper: float) -> np.ndarray:
        """[lower, upper] 内的全部折点/间断点（周期部件按区间枚举）。"""
        points = np.asarray(self.breakpoints(), dtype=float)
        return points[(points >= lower) & (points <= upper)]

    def to_dict(self) -> dict:
        data = {"kind": self.kind}
        for name, value in self.__dict__.items():
            if name == "amplitude":
                data[name] = value[0] if len(value) == 1 else list(value)
            else:
                data[name] = value
        return data


@dataclass(frozen=True)
class TrigPart(Part):
    """a · sin(ω t + φ)。余弦用 φ = π/2 表示。"""

    kind: ClassVar[str] = "trig"
    amplitude: tuple[float, ...]
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _as_amplitude(self.amplitude))

    def profile(self, t):
        return np.sin(self.frequency * t + self.phase)


@dataclass(frozen=True)
class DecayPart(Part):
    """a · e^{-r|t|}（双侧）或 a · e^{-rt} 1_{t≥0}（单侧）。"""

    kind: ClassVar[str] = "decay"
    amplitude: tuple[float, ...]
    rate: float = 1.0
    two_sided: bool = True

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _as_amplitude(self.amplitude))
        if not self.rate > 0:
            raise SignalError(f"衰减率必须为正: {self.rate}")

    def profile(self, t):
        if self.two_sided:
            return np.exp(-self.rate * np.abs(t))
        return np.where(t >= 0, np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def breakpoints(self):
        return (0.0,)


@dataclass(frozen=True)
class SignPart(Part):
    """a · sign(cos 2πθt)，θ 默认 √2。"""

    kind: ClassVar[str] = "sign"
    amplitude: tuple[float, ...]
    theta: float = SQRT2

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _as_amplitude(self.amplitude))
        if not self.theta > 0:
            raise SignalError(f"θ 必须为正: {self.theta}")

    def profile(self, t):
        return np.sign(np.cos(2.0 * np.pi * self.theta * t))

    def crossings(self, lower, upper):
        # 跳跃点 t = (k + 1/2) / (2θ)
        k = np.arange(math.ceil(2.0 * self.theta * lower - 0.5), math.floor(2.0 * self.theta * upper - 0.5) + 1)
        return (k + 0.5) / (2.0 * self.theta)


@dataclass(frozen=True)
class BumpPart(Part):
    """以 center 为中心、半径 radius 的光滑鼓包，峰值为 a。"""

    kind: ClassVar[str] = "bump"
    amplitude: tuple[float, ...]
    center: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _as_amplitude(self.amplitude))
        if not self.radius > 0:
            raise SignalError(f"鼓包半径必须为正: {self.radius}")

    def profile(self, t):
        r = np.abs(t - self.center) / self.radius
        inside = r < 1.0
        out = np.zeros_like(r)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out

    def breakpoints(self):
        return (self.center - self.radius, self.center + self.radius)


@dataclass(frozen=True)
class PowerPart(Part):
    """a · (1 + |t|)^{-κ}。"""

    kind: ClassVar[str] = "power"
    amplitude: tuple[float, ...]
    exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _as_amplitude(self.amplitude))
        if self.exponent < 0:
            raise SignalError(f"幂指数必须非负: {self.exponent}")

    def profile(self, t):
        return (1.0 + np.abs(t)) ** (-self.exponent)

    def breakpoints(self):
        return (0.0,)


@dataclass(frozen=True)
class PolynomialPart(Part):
    """Σ_k c_k t^k，系数为 ℝ^d 向量；常数与恒等映射都用它表示。"""

    kind: ClassVar[str] = "polynomial"
    coefficients: tuple[tuple[float, ...], ...] = ((1.0,),)

    def __post_init__(self):
        rows = tuple(_as_amplitude(c) for c in self.coefficients)
        if not rows or len({len(row) for row in rows}) != 1:
            raise SignalError("多项式系数维数不一致")
        object.__setattr__(self, "coefficients", rows)

    @property
    def amplitude(self) -> tuple[float, ...]:
        return self.coefficients[0]

    @property
    def dim(self) -> int:
        return len(self.coefficients[0])

    def evaluate(self, t):
        coeffs = np.asarray(self.coefficients)
        out = np.zeros((t.size, coeffs.shape[1]))
        for c in coeffs[::-1]:
            out = out * t[:, None] + c[None, :]
        return out

    def bound(self) -> float:
        if any(np.any(np.asarray(c) != 0.0) for c in self.coefficients[1:]):
            return math.inf
        return float(np.linalg.norm(self.coefficients[0]))

    def to_dict(self) -> dict:
        coeffs = [c[0] if len(c) == 1 else list(c) for c in self.coefficients]
        return {"kind": self.kind, "coefficients": coeffs}


@dataclass(frozen=True, eq=False)
class TablePart(Part):
    """均匀网格上的表格部件：线性插值，表外常值外推。"""

    kind: ClassVar[str] = "table"
    origin: float = 0.0
    step: float = 1.0
    values: np.ndarray = field(default_factory=lambda: np.zeros((2, 1)))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] < 2 or not self.step > 0:
            raise SignalError("表格部件至少两个点且步长为正")
        if not np.all(np.isfinite(values)):
            raise SignalError("表格部件含非有限值")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def amplitude(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.values[0])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def end(self) -> float:
        return self.origin + self.step * (self.values.shape[0] - 1)

    def evaluate(self, t):
        position = np.clip((t - self.origin) / self.step, 0.0, self.values.shape[0] - 1.0)
        index = np.minimum(np.floor(position).astype(np.int64), self.values.shape[0] - 2)
        frac = (position - index)[:, None]
        return self.values[index] * (1.0 - frac) + self.values[index + 1] * frac

    def bound(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def covers(self, lower: float, upper: float) -> bool:
        return self.origin <= lower and upper <= self.end

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "origin": self.origin,
            "step": self.step,
            "values": self.values.tolist(),
        }


@dataclass(frozen=True, eq=False)
class CustomPart(Part):
    """任意向量化可调用对象 t -> (N,) 或 (N, d)；不可序列化。"""

    kind: ClassVar[str] = "custom"
    func: Callable[[np.ndarray], np.ndarray] = None
    label: str = "custom"
    dimension: int = 1
    sup_bound: float = math.inf

    @property
    def amplitude(self) -> tuple[float, ...]:
        return (1.0,) * self.dimension

    @property
    def dim(self) -> int:
        return self.dimension

    def evaluate(self, t):
        values = np.asarray(self.func(t), dtype=float)
        return values.reshape(t.size, self.dimension)

    def bound(self) -> float:
        return self.sup_bound

    def to_dict(self) -> dict:
        raise SignalError(f"自定义部件不可序列化: {self.label}")


PART_TYPES: dict[str, type] = {
    cls.kind: cls
    for cls in (TrigPart, DecayPart, SignPart, BumpPart, PowerPart, PolynomialPart, TablePart)
}


# ---------------------------------------------------------------------------
# 信号
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnalyticSignal:
    """
    f(t) = scale · Σ parts(t - shift)，当 t - shift < cutoff 时取 0。

    部件可以是 Part，也可以是嵌套的 AnalyticSignal（用于不同平移量的和）。
    """

    parts: tuple = ()
    shift: float = 0.0
    cutoff: Optional[float] = None
    scale: float = 1.0
    dimension: Optional[int] = None

    def __post_init__(self):
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        dims = {part.dim for part in parts}
        if len(dims) > 1:
            raise SignalError(f"部件维数不一致: {sorted(dims)}")
        if dims:
            dim = dims.pop()
            if self.dimension is not None and self.dimension != dim:
                raise SignalError(f"声明维数 {self.dimension} 与部件维数 {dim} 不符")
            object.__setattr__(self, "dimension", dim)
        elif self.dimension is None:
            object.__setattr__(self, "dimension", 1)
        if not np.isfinite(self.scale) or not np.isfinite(self.shift):
            raise SignalError("scale 与 shift 必须有限")

    @property
    def dim(self) -> int:
        return self.dimension

    def __call__(self, t) -> np.ndarray:
        """返回形状 (N, d) 的取值。"""
        t = _times(t)
        s = t - self.shift
        out = np.zeros((t.size, self.dim))
        for part in self.parts:
            out += part(s) if isinstance(part, AnalyticSignal) else part.evaluate(s)
        if self.scale != 1.0:
            out *= self.scale
        if self.cutoff is not None:
            out[s < self.cutoff] = 0.0
        return out

    def value_at(self, t: float) -> np.ndarray:
        return self(np.array([t]))[0]

    def norm(self, t) -> np.ndarray:
        """逐点欧氏范数 ‖f(t)‖。"""
        return np.linalg.norm(self(t), axis=1)

    def is_zero(self) -> bool:
        if self.scale == 0.0:
            return True
        return all(
            part.is_zero() if isinstance(part, AnalyticSignal) else _part_is_zero(part)
            for part in self.parts
        )

    def bound(self) -> float:
        """sup‖f‖ 的上界（部件界之和）；无界部件返回 inf。"""
        total = 0.0
        for part in self.parts:
            total += part.bound()
        return abs(self.scale) * total

    def breakpoints(self) -> tuple[float, ...]:
        points = []
        for part in self.parts:
            points.extend(part.breakpoints())
        if self.cutoff is not None:
            points.append(self.cutoff)
        return tuple(sorted({p + self.shift for p in points if np.isfinite(p)}))

    def breakpoints_between(self, lower: float, upper: float, limit: int = MAX_CROSSINGS) -> np.ndarray:
        """区间内的全部折点，含周期跳跃部件的跳跃点；超过 limit 个时只保留有限折点。"""
        found = [part.breakpoints_between(lower - self.shift, upper - self.shift, limit)
                 if isinstance(part, AnalyticSignal) else part.crossings(lower - self.shift, upper - self.shift)
                 for part in self.parts]
        if self.cutoff is not None:
            found.append(np.asarray([self.cutoff]))
        points = np.concatenate(found) + self.shift if found else np.empty(0)
        points = points[(points >= lower) & (points <= upper)]
        if points.size > limit:
            logger.debug("跳跃点过多 (%d)，仅使用有限折点", points.size)
            finite = np.asarray(self.breakpoints())
            return finite[(finite >= lower) & (finite <= upper)]
        return np.unique(points)

    def tables(self) -> list[tuple[TablePart, float]]:
        """所有表格部件及其在外层时间坐标中的平移量。"""
        found = []
        for part in self.parts:
            if isinstance(part, AnalyticSignal):
                found.extend((table, offset + self.shift) for table, offset in part.tables())
            elif isinstance(part, TablePart):
                found.append((part, self.shift))
        return found

    def extrapolation_flags(self, lower: float, upper: float) -> list[str]:
        """窗口超出表格覆盖范围时返回诊断标记（表外按常值外推）。"""
        flags = []
        for table, offset in self.tables():
            start, end = table.origin + offset, table.end + offset
            if lower < start or upper > end:
                flags.append(f"table[{start:g}, {end:g}] 常值外推至 [{lower:g}, {upper:g}]")
        return flags

    def __add__(self, other: "AnalyticSignal") -> "AnalyticSignal":
        if not isinstance(other, AnalyticSignal):
            return NotImplemented
        if self.dim != other.dim:
            raise SignalError(f"维数不同的信号不能相加: {self.dim} 与 {other.dim}")
        if _is_plain(self) and _is_plain(other):
            return AnalyticSignal(self.parts + other.parts, dimension=self.dim)
        return AnalyticSignal((self, other), dimension=self.dim)

    def __mul__(self, factor: float) -> "AnalyticSignal":
        return replace(self, scale=self.scale * float(factor))

    __rmul__ = __mul__

    def __neg__(self) -> "AnalyticSignal":
        return self * -1.0

    def __sub__(self, other: "AnalyticSignal") -> "AnalyticSignal":
        return self + (-other)

    def to_dict(self) -> dict:
        data: dict[str, Any] = {
            "parts": [
                {"kind": "signal", **part.to_dict()} if isinstance(part, AnalyticSignal) else part.to_dict()
                for part in self.parts
            ]
        }
        if self.shift:
            data["shift"] = self.shift
        if self.cutoff is not None:
            data["cutoff"] = self.cutoff
        if self.scale != 1.0:
            data["scale"] = self.scale
        if not self.parts:
            data["dim"] = self.dim
        return data


def _is_plain(signal: AnalyticSignal) -> bool:
    return signal.shift == 0.0 and signal.cutoff is None and signal.scale == 1.0


def _part_is_zero(part: Part) -> bool:
    if isinstance(part, TablePart):
        return not np.any(part.values)
    if isinstance(part, PolynomialPart):
        return not any(np.any(np.asarray(c)) for c in part.coefficients)
    if isinstance(part, CustomPart):
        return False
    return not any(part.amplitude)


def zero_signal(dim: int = 1) -> AnalyticSignal:
    return AnalyticSignal((), dimension=dim)


def constant(value=1.0) -> AnalyticSignal:
    return AnalyticSignal((PolynomialPart((value,)),))


def identity_map() -> AnalyticSignal:
    """t ↦ t。"""
    return AnalyticSignal((PolynomialPart((0.0, 1.0)),))


def trig(amplitude=1.0, frequency: float = 1.0, phase: float = 0.0) -> AnalyticSignal:
    return AnalyticSignal((TrigPart(amplitude, frequency, phase),))


def decay(amplitude=1.0, rate: float = 1.0, two_sided: bool = True) -> AnalyticSignal:
    return AnalyticSignal((DecayPart(amplitude, rate, two_sided),))


def sign_wave(amplitude=1.0, theta: float = SQRT2) -> AnalyticSignal:
    return AnalyticSignal((SignPart(amplitude, theta),))


def bump(amplitude=1.0, center: float = 0.0, radius: float = 1.0) -> AnalyticSignal:
    return AnalyticSignal((BumpPart(amplitude, center, radius),))


def power_decay(amplitude=1.0, exponent: float = 1.0) -> AnalyticSignal:
    return AnalyticSignal((PowerPart(amplitude, exponent),))


def custom(func: Callable[[np.ndarray], np.ndarray], label: str, dim: int = 1,
           sup_bound: float = math.inf) -> AnalyticSignal:
    return AnalyticSignal((CustomPart(func=func, label=label, dimension=dim, sup_bound=sup_bound),))


def lift_to_vector(signal: AnalyticSignal, vector: Sequence[float]) -> AnalyticSignal:
    """标量信号 s(t) 乘以固定向量 v，得到 ℝ^d 值信号 s(t)·v。"""
    if signal.dim != 1:
        raise SignalError("只有标量信号可以提升为向量信号")
    vector = np.asarray(vector, dtype=float)
    return custom(
        lambda t: signal(t)[:, :1] * vector[None, :],
        label="lifted",
        dim=vector.size,
        sup_bound=signal.bound() * float(np.linalg.norm(vector)),
    )


def signal_from_dict(data: Union[dict, list]) -> AnalyticSignal:
    """从配置映射构造信号；列表视为部件列表。"""
    if isinstance(data, list):
        data = {"parts": data}
    if not isinstance(data, dict):
        raise SignalError(f"信号描述必须是映射或列表: {data!r}")
    parts = []
    for item in data.get("parts", []):
        if not isinstance(item, dict) or "kind" not in item:
            raise SignalError(f"部件描述缺少 kind: {item!r}")
        item = dict(item)
        kind = item.pop("kind")
        if kind == "signal":
            parts.append(signal_from_dict(item))
            continue
        if kind in ("const", "constant"):
            parts.append(PolynomialPart((item.get("value", item.get("amplitude", 1.0)),)))
            continue
        if kind == "identity":
            parts.append(PolynomialPart((0.0, item.get("amplitude", 1.0))))
            continue
        part_type = PART_TYPES.get(kind)
        if part_type is None:
            raise SignalError(f"未知的部件类型: {kind}")
        if kind == "polynomial":
            item["coefficients"] = tuple(item.get("coefficients", (1.0,)))
        if kind == "table":
            item["values"] = np.asarray(item.get("values", []), dtype=float)
        if kind != "polynomial" and kind != "table":
            item.setdefault("amplitude", 1.0)
        try:
            parts.append(part_type(**item))
        except TypeError as exc:
            raise SignalError(f"部件 {kind} 参数非法: {exc}") from exc
    cutoff = data.get("cutoff")
    return AnalyticSignal(
        tuple(parts),
        shift=float(data.get("shift", 0.0)),
        cutoff=None if cutoff is None else float(cutoff),
        scale=float(data.get("scale", 1.0)),
        dimension=data.get("dim"),
    )


def signal_to_dict(signal: AnalyticSignal) -> dict:
    return signal.to_dict()


# ---------------------------------------------------------------------------
# 网格函数
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """均匀网格上的采样值，values 形状 (N, d)。"""

    origin: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if not self.step > 0:
            raise SignalError(f"网格步长必须为正: {self.step}")
        if values.ndim != 2 or values.shape[0] < 2:
            raise SignalError("网格函数至少包含两个采样点")
        if not np.all(np.isfinite(values)):
            raise SignalError("网格函数含非有限值")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.values.shape[0])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def end(self) -> float:
        return float(self.origin + self.step * (self.values.shape[0] - 1))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def distance(self, other: "GridFunction") -> float:
        if self.values.shape != other.values.shape:
            raise SignalError("网格形状不同，无法比较")
        return float(np.max(np.linalg.norm(self.values - other.values, axis=1)))

    def window(self, lower: float, upper: float) -> "GridFunction":
        times = self.times
        mask = (times >= lower - 1e-12) & (times <= upper + 1e-12)
        index = np.flatnonzero(mask)
        return GridFunction(float(times[index[0]]), self.step, self.values[index])

    def as_signal(self) -> AnalyticSignal:
        return AnalyticSignal((TablePart(origin=self.origin, step=self.step, values=self.values),))

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file)
            writer.writerow(["t"] + [f"v_{i + 1}" for i in range(self.dim)])
            for t, row in zip(self.times, self.values):
                writer.writerow([repr(float(t))] + [repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "GridFunction":
        with open(path, "r", encoding="utf-8") as file:
            rows = list(csv.reader(file))
        if len(rows) < 3 or rows[0][0] != "t":
            raise SignalError(f"CSV 格式不符（需要表头 t,v_1..v_d）: {path}")
        data = np.asarray([[float(x) for x in row] for row in rows[1:]])
        times = data[:, 0]
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise SignalError(f"CSV 时间列不是均匀网格: {path}")
        return cls(float(times[0]), float(steps[0]), data[:, 1:])


def sample(signal: AnalyticSignal, window: Sequence[float], step: float) -> GridFunction:
    """在 [a, b] 上以步长 step 采样：values[i] = f(a + i·step)。"""
    lower, upper = float(window[0]), float(window[1])
    if not step > 0:
        raise SignalError(f"采样步长必须为正: {step}")
    if not lower < upper:
        raise SignalError(f"采样窗口为空: [{lower}, {upper}]")
    count = int(math.floor((upper - lower) / step + 1e-9)) + 1
    if count < 2:
        raise SignalError("采样窗口短于一个步长")
    times = lower + step * np.arange(count)
    return GridFunction(lower, step, signal(times))


def translate(signal: AnalyticSignal, s: float) -> AnalyticSignal:
    """前移 s：结果 (t) = signal(t - s)。"""
    if s == 0.0:
        return signal
    return replace(signal, shift=signal.shift + float(s))


def extend_by_zero(q: AnalyticSignal) -> AnalyticSignal:
    """t ≥ 0 时取 q(t)，t < 0 时取 0。"""
    cutoff = -q.shift if q.cutoff is None else max(q.cutoff, -q.shift)
    return replace(q, cutoff=cutoff)


def stepanov_lift(f: AnalyticSignal, t: float, points: int = 65) -> GridFunction:
    """Stepanov 提升 s ↦ f(t + s)，在 [0, 1] 上均匀采样。"""
    step = 1.0 / (points - 1)
    return GridFunction(0.0, step, f(t + step * np.arange(points)))


# ---------------------------------------------------------------------------
# 权函数
# ---------------------------------------------------------------------------

WEIGHT_KINDS = ("constant", "polynomial", "exponential", "gaussian", "tabulated")


@dataclass(frozen=True)
class Weight:
    """
    ℝ 上的正权函数 ρ。

    kind / params:
      constant     (c,)              ρ = c
      polynomial   (c_0, c_1, ...)   ρ = Σ c_k t^k，默认 1 + t²
      exponential  (a,)              ρ = e^{a t}
      gaussian     (a,)              ρ = e^{a t²}
      tabulated    (origin, step, v_0, v_1, ...)  线性插值，表外常值
    """

    kind: str = "constant"
    params: tuple[float, ...] = (1.0,)
    label: str = ""

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise SignalError(f"未知的权函数类型: {self.kind}")
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == "constant" and (len(params) != 1 or params[0] <= 0):
            raise SignalError("常数权必须为正")
        if self.kind in ("exponential", "gaussian") and len(params) != 1:
            raise SignalError(f"{self.kind} 权需要一个参数")
        if self.kind == "gaussian" and params[0] <= 0:
            raise SignalError("gaussian 权的参数必须为正")
        if self.kind == "polynomial":
            samples = self(np.linspace(-1e4, 1e4, 20001))
            if not params or np.any(samples <= 0):
                raise SignalError(f"多项式权在扫描网格上不为正: {params}")
        if self.kind == "tabulated":
            if len(params) < 4 or params[1] <= 0 or min(params[2:]) <= 0:
                raise SignalError("表格权需要 origin, step 与至少两个正值")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.kind == "constant":
            return f"{self.params[0]:g}"
        if self.kind == "polynomial":
            terms = [f"{c:g}" + ("" if k == 0 else "t" if k == 1 else f"t^{k}")
                     for k, c in enumerate(self.params) if c != 0]
            return "+".join(terms)
        if self.kind == "exponential":
            return f"e^({self.params[0]:g}t)"
        if self.kind == "gaussian":
            return f"e^({self.params[0]:g}t^2)"
        return "tabulated"

    @classmethod
    def constant(cls, value: float = 1.0) -> "Weight":
        return cls("constant", (value,))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float] = (1.0, 0.0, 1.0)) -> "Weight":
        return cls("polynomial", tuple(coefficients))

    @classmethod
    def exponential(cls, rate: float) -> "Weight":
        return cls("exponential", (rate,))

    @classmethod
    def gaussian(cls, rate: float = 1.0) -> "Weight":
        return cls("gaussian", (rate,))

    @classmethod
    def tabulated(cls, origin: float, step: float, values: Sequence[float]) -> "Weight":
        return cls("tabulated", (origin, step, *values))

    @classmethod
    def from_dict(cls, data: Union[dict, str, float, int, None]) -> "Weight":
        if data is None:
            return cls.constant()
        if isinstance(data, (int, float)):
            return cls.constant(float(data))
        if isinstance(data, str):
            shorthand = {"1": cls.constant(), "1+t^2": cls.polynomial(), "e^t^2": cls.gaussian()}
            if data not in shorthand:
                raise SignalError(f"未知的权函数简写: {data}")
            return shorthand[data]
        kind = data.get("kind", "constant")
        if kind == "constant":
            return cls.constant(float(data.get("value", 1.0)))
        if kind == "polynomial":
            return cls.polynomial(tuple(data.get("coefficients", (1.0, 0.0, 1.0))))
        if kind in ("exponential", "gaussian"):
            return cls(kind, (float(data.get("rate", 1.0)),))
        if kind == "tabulated":
            return cls.tabulated(float(data["origin"]), float(data["step"]), data["values"])
        raise SignalError(f"未知的权函数类型: {kind}")

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coefficients": list(self.params)}
        if self.kind in ("exponential", "gaussian"):
            return {"kind": self.kind, "rate": self.params[0]}
        return {"kind": "tabulated", "origin": self.params[0], "step": self.params[1],
                "values": list(self.params[2:])}

    # -- 取值 --------------------------------------------------------------

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.params[0])
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(t, self.params)
        if self.kind == "exponential":
            return np.exp(self.params[0] * t)
        if self.kind == "gaussian":
            return np.exp(self.params[0] * t * t)
        origin, step = self.params[0], self.params[1]
        table = np.asarray(self.params[2:])
        grid = origin + step * np.arange(table.size)
        return np.interp(t, grid, table)

    def log_value(self, t) -> np.ndarray:
        """log ρ(t)，对指数型权不会溢出。"""
        t = np.asarray(t, dtype=float)
        if self.kind == "exponential":
            return self.params[0] * t
        if self.kind == "gaussian":
            return self.params[0] * t * t
        return np.log(self(t))

    def antiderivative(self, x) -> np.ndarray:
        """P(x) = ∫_0^x ρ，带符号。"""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return self.params[0] * x
        if self.kind == "polynomial":
            integral = np.polynomial.polynomial.polyint(self.params)
            return np.polynomial.polynomial.polyval(x, integral)
        if self.kind == "exponential":
            a = self.params[0]
            if a == 0.0:
                return x.copy()
            with np.errstate(over="ignore"):
                return np.expm1(a * x) / a
        if self.kind == "gaussian":
            root = math.sqrt(self.params[0])
            with np.errstate(over="ignore"):
                return math.sqrt(math.pi) / (2.0 * root) * special.erfi(root * x)
        return _tabulated_antiderivative(self.params, x)

    def mass_between(self, a, b) -> np.ndarray:
        return self.antiderivative(b) - self.antiderivative(a)

    def mass(self, T) -> Union[float, np.ndarray]:
        """ν(T, ρ) = ∫_{-T}^{T} ρ。"""
        if np.ndim(T) == 0:
            return _cached_mass(self, float(T))
        T = np.asarray(T, dtype=float)
        return self.antiderivative(T) - self.antiderivative(-T)

    def one_sided_mass(self, T) -> Union[float, np.ndarray]:
        """∫_0^T ρ。"""
        value = self.antiderivative(T)
        return float(value) if np.ndim(T) == 0 else value


@lru_cache(maxsize=4096)
def _cached_mass(weight: Weight, T: float) -> float:
    return float(weight.antiderivative(T) - weight.antiderivative(-T))


def _tabulated_antiderivative(params: tuple[float, ...], x: np.ndarray) -> np.ndarray:
    origin, step = params[0], params[1]
    table = np.asarray(params[2:])
    grid = origin + step * np.arange(table.size)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * step * (table[1:] + table[:-1]))])

    def primitive(y):
        y = np.asarray(y, dtype=float)
        inside = np.clip(y, grid[0], grid[-1])
        index = np.clip(np.searchsorted(grid, inside, side="right") - 1, 0, table.size - 2)
        frac = inside - grid[index]
        slope = (table[index + 1] - table[index]) / step
        value = cumulative[index] + table[index] * frac + 0.5 * slope * frac * frac
        value = value + np.where(y < grid[0], (y - grid[0]) * table[0], 0.0)
        value = value + np.where(y > grid[-1], (y - grid[-1]) * table[-1], 0.0)
        return value

    return primitive(x) - primitive(0.0)


# ---------------------------------------------------------------------------
# 权函数类别
# ---------------------------------------------------------------------------

SCAN_STEP = 1.0 / 16.0


@dataclass
class WeightClassReport:
    """U / U_∞ / U_b / U_T 的扫描判定。inf 条件按字面是空条件，只记录为 unchecked。"""

    weight: str
    in_U: bool
    in_U_infinity: bool
    bounded: bool
    in_U_b: bool
    in_U_T: bool
    one_sided_U_infinity: bool
    inf_condition: str = "unchecked"
    mass_ladder: list = field(default_factory=list)
    sup_ladder: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "in_U": self.in_U,
            "in_U_infinity": self.in_U_infinity,
            "bounded": self.bounded,
            "in_U_b": self.in_U_b,
            "in_U_T": self.in_U_T,
            "one_sided_U_infinity": self.one_sided_U_infinity,
            "inf_condition": self.inf_condition,
            "mass_ladder": [[p, _finite_or_none(v)] for p, v in self.mass_ladder],
            "sup_ladder": [[p, _finite_or_none(v)] for p, v in self.sup_ladder],
        }


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def _scan_ladder(settings) -> np.ndarray:
    return settings.ladder_base * 2.0 ** np.arange(settings.dominator_levels)


def log_sup_ladder(log_fn: Callable[[np.ndarray], np.ndarray], settings) -> list[tuple[float, float]]:
    """嵌套扫描 [-X_k, X_k]（步长固定）上 log 函数的上确界阶梯。"""
    ladder = []
    for half_width in _scan_ladder(settings):
        nodes = np.arange(-half_width, half_width + SCAN_STEP / 2, SCAN_STEP)
        with np.errstate(over="ignore", invalid="ignore"):
            values = log_fn(nodes)
        top = float(np.max(values)) if np.all(np.isfinite(values)) else math.inf
        ladder.append((float(half_width), top))
    return ladder


def ladder_stabilized(ladder: list[tuple[float, float]], rel: float = 1e-9) -> bool:
    """嵌套扫描的 sup 不再增长即视为有界。"""
    previous, last = ladder[-2][1], ladder[-1][1]
    if not (math.isfinite(previous) and math.isfinite(last)):
        return False
    return last - previous <= rel * (1.0 + abs(previous))


def mass_diverges(params: np.ndarray, masses: np.ndarray, tail: int = 4, min_slope: float = 0.25) -> bool:
    masses = np.asarray(masses, dtype=float)
    if not np.all(np.isfinite(masses)):
        return True
    params = np.asarray(params, dtype=float)[-tail:]
    tail_masses = masses[-tail:]
    if np.any(tail_masses <= 0):
        return False
    slope = np.polyfit(np.log(params), np.log(tail_masses), 1)[0]
    return bool(slope >= min_slope)


def _ratio_in_U_b(log_ratio: Callable[[np.ndarray], np.ndarray], settings) -> tuple[bool, list]:
    ladder = log_sup_ladder(log_ratio, settings)
    if not ladder_stabilized(ladder):
        return False, ladder
    # 比值的质量阶梯（扫描网格上的梯形和）
    params, masses = [], []
    for half_width in _scan_ladder(settings):
        nodes = np.arange(-half_width, half_width + SCAN_STEP / 2, SCAN_STEP)
        with np.errstate(over="ignore"):
            masses.append(float(integrate.trapezoid(np.exp(log_ratio(nodes)), nodes)))
        params.append(half_width)
    return mass_diverges(np.asarray(params), np.asarray(masses)), ladder


def weights_equivalent(rho1: Weight, rho2: Weight, settings=None) -> bool:
    """ρ₁ ~ ρ₂ 当且仅当 ρ₁/ρ₂ ∈ U_b。"""
    settings = resolve_settings(settings)
    ok, _ = _ratio_in_U_b(lambda t: rho1.log_value(t) - rho2.log_value(t), settings)
    return ok


def weight_classes(rho: Weight, settings=None) -> WeightClassReport:
    settings = resolve_settings(settings)
    ladder = settings.ladder()
    nodes = np.arange(-settings.ladder_max, settings.ladder_max + 0.125, 0.125)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        logs = rho.log_value(nodes)
    in_U = bool(np.all(np.isfinite(logs)))

    with np.errstate(over="ignore"):
        masses = np.asarray(rho.mass(ladder), dtype=float)
        one_sided = np.asarray(rho.one_sided_mass(ladder), dtype=float)
    in_U_infinity = in_U and mass_diverges(ladder, masses, settings.tail_rungs)
    one_sided_U_infinity = in_U and mass_diverges(ladder, one_sided, settings.tail_rungs)

    sup_ladder = log_sup_ladder(rho.log_value, settings)
    bounded = ladder_stabilized(sup_ladder)
    in_U_T = in_U_infinity and all(
        _ratio_in_U_b(lambda t, s=s: rho.log_value(t + s) - rho.log_value(t), settings)[0]
        for s in settings.translation_shifts
    )
    logger.debug("权函数 %s: U=%s U_inf=%s bounded=%s U_T=%s", rho.label, in_U, in_U_infinity, bounded, in_U_T)
    return WeightClassReport(
        weight=rho.label,
        in_U=in_U,
        in_U_infinity=in_U_infinity,
        bounded=bounded,
        in_U_b=bounded and in_U_infinity,
        in_U_T=in_U_T,
        one_sided_U_infinity=one_sided_U_infinity,
        mass_ladder=[(float(T), float(m)) for T, m in zip(ladder, masses)],
        sup_ladder=[(x, math.exp(v) if v < 700 else math.inf) for x, v in sup_ladder],
    )


def v_infinity_check(rho1: Weight, rho2: Weight, tau_samples: Sequence[float] = (1.0, -3.0),
                     settings=None) -> dict:
    """(ρ₁, ρ₂) ∈ V_∞：平移比 ρ₂(t+τ)/ρ₂(t) 有界，且质量比 ∫ρ₁/∫ρ₂ 有界。"""
    settings = resolve_settings(settings)
    translation = {}
    for tau in tau_samples:
        ladder = log_sup_ladder(lambda t, tau=tau: rho2.log_value(t + tau) - rho2.log_value(t), settings)
        translation[str(float(tau))] = ladder_stabilized(ladder)

    ladder = settings.ladder()
    with np.errstate(over="ignore", invalid="ignore"):
        ratios = np.asarray(rho1.mass(ladder), dtype=float) / np.asarray(rho2.mass(ladder), dtype=float)
    finite = bool(np.all(np.isfinite(ratios)))
    tail = ratios[-settings.tail_rungs:]
    mass_ratio_bounded = finite and bool(tail[-1] <= tail[0] * (1.0 + 1e-6) + 1e-12)
    return {
        "translation_ratio_bounded": translation,
        "mass_ratio_ladder": [[float(T), _finite_or_none(r)] for T, r in zip(ladder, ratios)],
        "mass_ratio_bounded": mass_ratio_bounded,
        "in_V_infinity": all(translation.values()) and mass_ratio_bounded,
    }
