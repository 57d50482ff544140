"""
场景运行器 - 批量执行配置中的场景

流水线：
  1. [解析] 配置中的 scenarios 转成 Scenario，按 id 去重、过滤停用项
  2. [执行] 逐个（或 --jobs 并行）运行：范数、判定、权检查、卷积、不动点、命题
  3. [汇总] 结果按配置顺序组装为 RunReport，写出 JSON 报告与 CSV 附件
"""

import hashlib
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from wpaa import classify, seminorms, volterra
from wpaa.classify import PropositionReport
from wpaa.config_loader import (
    PROPOSITION_ALIASES,
    SCHEMA_VERSION,
    ConfigError,
    Settings,
    resolve_settings,
)
from wpaa.opfam import OperatorModel, OperatorModelError, SpecialFunctionError
from wpaa.quadrature import TailBoundError
from wpaa.seminorms import EstimatorError, LimitEstimate, SeminormSpec, Side, json_safe
from wpaa.signals import (
    AnalyticSignal,
    SignalError,
    Weight,
    bump,
    decay,
    identity_map,
    power_decay,
    sign_wave,
    signal_from_dict,
    trig,
    zero_signal,
)

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"
# 场景内可预期的失败：记录为 error，不中断整个批次
SCENARIO_FAILURES = (
    SignalError,
    EstimatorError,
    OperatorModelError,
    SpecialFunctionError,
    TailBoundError,
    ConfigError,
)


class ScenarioError(RuntimeError):
    """场景无法执行（输入缺失或不合法）。"""


# ---------------------------------------------------------------------------
# 输入解析
# ---------------------------------------------------------------------------

SIGNAL_CORPUS: dict[str, Callable[[], AnalyticSignal]] = {
    "zero": zero_signal,
    "sin": trig,
    "cos": lambda: trig(phase=math.pi / 2),
    "sin+sin-sqrt2": lambda: trig() + trig(frequency=math.sqrt(2.0)),
    "sign-sqrt2": sign_wave,
    "bump": bump,
    "decay": decay,
    "decay-one-sided": lambda: decay(two_sided=False),
    "power-quarter": lambda: power_decay(exponent=0.25),
    "identity": identity_map,
    "sin+decay": lambda: trig() + decay(),
}


def parse_signal(data: Any) -> AnalyticSignal:
    """信号描述：语料名（如 "sin"）、部件映射或部件列表。"""
    if data is None:
        return zero_signal()
    if isinstance(data, str):
        factory = SIGNAL_CORPUS.get(data)
        if factory is None:
            raise ScenarioError(f"未知的信号名: {data}（可用: {', '.join(SIGNAL_CORPUS)}）")
        return factory()
    return signal_from_dict(data)


def parse_weight(data: Any, default: str = "1") -> Weight:
    return Weight.from_dict(default if data is None else data)


def parse_dominator(data: Any) -> Optional[Callable[[float], float]]:
    """g(s) 的多项式系数（升幂），如 [2, 0, 2] 表示 2(1+s²)。"""
    if data is None:
        return None
    coefficients = data.get("coefficients") if isinstance(data, dict) else data
    try:
        coefficients = [float(c) for c in coefficients]
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"dominator 必须是系数列表: {data!r}") from exc
    return lambda s: float(np.polynomial.polynomial.polyval(abs(s), coefficients))


def parse_nonlinearity(data: Optional[dict]) -> volterra.Nonlinearity:
    data = dict(data or {})
    return volterra.Nonlinearity.from_dict(data, forcing=parse_signal(data.get("forcing")))


def parse_kernel(data: dict, settings: Settings) -> volterra.Kernel:
    """核描述；信号核的 signal 可以是语料名。"""
    if isinstance(data, dict) and data.get("kind") == "signal" and isinstance(data.get("signal"), str):
        return volterra.SignalKernel(parse_signal(data["signal"]), bool(data.get("two_sided", True)))
    return volterra.kernel_from_dict(data, settings)


def _require(inputs: dict, key: str) -> Any:
    if key not in inputs:
        raise ScenarioError(f"缺少输入字段: {key}")
    return inputs[key]


# ---------------------------------------------------------------------------
# 命题注册表
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropositionEntry:
    id: str
    statement: str
    tags: tuple
    defaults: dict
    run: Callable[[dict, Settings], PropositionReport]

    def to_dict(self) -> dict:
        return {"id": self.id, "statement": self.statement, "tags": list(self.tags), "defaults": self.defaults}


def _run_weyl_extension(inputs: dict, settings: Settings) -> PropositionReport:
    return classify.verify_weyl_extension(parse_signal(inputs.get("q")), float(inputs.get("p", 1.0)), settings)


def _run_conv_invariance(inputs: dict, settings: Settings) -> PropositionReport:
    return classify.convolution_invariance_demo(
        parse_signal(inputs.get("q")), parse_signal(inputs.get("g")),
        parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2")), settings=settings)


def _run_translation_invariance(inputs: dict, settings: Settings) -> PropositionReport:
    shifts = inputs.get("shifts")
    return classify.translation_invariance_check(
        parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2")),
        None if shifts is None else [float(s) for s in shifts],
        parse_dominator(inputs.get("dominator")), settings)


def _run_infinite_conv(inputs: dict, settings: Settings) -> PropositionReport:
    return volterra.verify_prop_infinite(
        parse_signal(inputs.get("g")), parse_signal(inputs.get("q")),
        parse_kernel(inputs.get("kernel", {"kind": "exponential"}), settings),
        parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2")),
        float(inputs.get("p", 1.0)), inputs.get("sequence"), settings)


def _run_besicovitch_conv(inputs: dict, settings: Settings) -> PropositionReport:
    return volterra.verify_prop_besicovitch(
        parse_signal(inputs.get("g")), parse_signal(inputs.get("q")),
        parse_kernel(inputs.get("kernel", {"kind": "exponential"}), settings),
        parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2")), settings)


def _run_finite_conv(inputs: dict, settings: Settings) -> PropositionReport:
    return volterra.verify_prop_finite(
        parse_signal(inputs.get("f")),
        parse_kernel(inputs.get("kernel", {"kind": "exponential"}), settings),
        parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2")),
        parse_dominator(inputs.get("dominator")), settings)


def _fixed_point_kernel(inputs: dict, settings: Settings, fractional: bool) -> volterra.Kernel:
    model = OperatorModel.from_dict(inputs.get("model", {"scalar": -1.0}))
    if fractional:
        return volterra.SubordinatedKernel(model, float(inputs.get("gamma", 0.5)), settings=settings)
    return volterra.SemigroupKernel(model)


def _run_fixed_point(inputs: dict, settings: Settings) -> PropositionReport:
    kernel = _fixed_point_kernel(inputs, settings, fractional=False)
    return volterra.verify_fixed_point(kernel, parse_nonlinearity(inputs.get("nonlinearity")), settings)


def _run_fixed_point_gamma(inputs: dict, settings: Settings) -> PropositionReport:
    kernel = _fixed_point_kernel(inputs, settings, fractional=True)
    return volterra.verify_fixed_point(kernel, parse_nonlinearity(inputs.get("nonlinearity")), settings)


def _run_poisson_heat(inputs: dict, settings: Settings) -> PropositionReport:
    return volterra.poisson_heat_scenario(
        n_grid=int(inputs.get("n_grid", 16)),
        b=float(inputs.get("b", 1.0)),
        gamma=float(inputs.get("gamma", 0.5)),
        g=parse_signal(inputs.get("g")),
        q=parse_signal(inputs.get("q")),
        rho1=parse_weight(inputs.get("rho1"), "1+t^2"),
        rho2=parse_weight(inputs.get("rho2")),
        node=inputs.get("node"),
        classify_trajectory=bool(inputs.get("classify", True)),
        settings=settings,
    )


_NONLINEARITY = {"forcing": "sin", "coupling": {"kind": "tanh", "epsilon": 0.1}}

REGISTRY: dict[str, PropositionEntry] = {
    entry.id: entry
    for entry in (
        PropositionEntry("weyl-extension", "q ∈ W^p₀([0,∞)) 的零延拓属于 W^pWPAA₀", ("weyl",),
                         {"q": "bump", "p": 1.0}, _run_weyl_extension),
        PropositionEntry("conv-invariance", "g ∈ L¹ 与 B¹WPAA₀ 中 q 的卷积仍在 B¹WPAA₀", ("besicovitch",),
                         {"q": "decay", "g": "decay-one-sided", "rho1": "1+t^2", "rho2": "1"},
                         _run_conv_invariance),
        PropositionEntry("translation-invariance", "边界质量比趋于 0 且存在控制函数时 PAP₀ 平移不变", ("weights",),
                         {"rho1": "1+t^2", "rho2": "1+t^2", "dominator": [2.0, 0.0, 2.0]},
                         _run_translation_invariance),
        PropositionEntry("infinite-conv", "S^p 伪 a.a. 强迫项经 (−∞, t] 卷积得 AA + S^pWPAA₀", ("conv",),
                         {"g": "sin", "q": "decay", "kernel": {"kind": "exponential"}, "p": 1.0},
                         _run_infinite_conv),
        PropositionEntry("besicovitch-conv", "有界 q 与一阶矩有限的核卷积后 Besicovitch 遍历泛函消失", ("conv",),
                         {"q": "decay", "kernel": {"kind": "exponential"}, "rho1": "1+t^2", "rho2": "1"},
                         _run_besicovitch_conv),
        PropositionEntry("finite-conv", "[0, t] 上的卷积保持 PAP₀([0,∞))", ("conv",),
                         {"f": "decay-one-sided", "kernel": {"kind": "exponential"}, "rho1": "1+t^2",
                          "rho2": "1+t^2", "dominator": [2.0, 0.0, 2.0]},
                         _run_finite_conv),
        PropositionEntry("fixed-point-Λ", "M_n 常数小于 1 时一阶半线性方程有唯一温和解", ("fixed-point",),
                         {"model": {"scalar": -1.0}, "nonlinearity": _NONLINEARITY}, _run_fixed_point),
        PropositionEntry("fixed-point-Λγ", "B_n 常数小于 1 时分数阶半线性方程有唯一温和解", ("fixed-point",),
                         {"model": {"scalar": -1.0}, "gamma": 0.5, "nonlinearity": _NONLINEARITY},
                         _run_fixed_point_gamma),
        PropositionEntry("poisson-heat", "分数阶 Poisson 热方程的首模态响应与轨迹分类", ("pde",),
                         {"n_grid": 16, "b": 1.0, "gamma": 0.5, "g": "sin", "q": "decay"}, _run_poisson_heat),
    )
}

ALIASES = PROPOSITION_ALIASES


def resolve_proposition(name: str) -> PropositionEntry:
    entry = REGISTRY.get(ALIASES.get(name, name))
    if entry is None:
        raise ScenarioError(f"未知的命题 id: {name}")
    return entry


def list_registry(filter_text: Optional[str] = None) -> list[dict]:
    """注册表条目（固定顺序）；filter 匹配 id 或标签。"""
    entries = []
    for entry in REGISTRY.values():
        if filter_text is None or filter_text == entry.id or filter_text in entry.tags \
                or ALIASES.get(filter_text) == entry.id:
            entries.append(entry.to_dict())
    return entries


def verify(proposition: str, inputs: Optional[dict] = None, settings: Optional[Settings] = None) -> PropositionReport:
    """按注册表默认输入（被 inputs 覆盖）运行一个命题。"""
    entry = resolve_proposition(proposition)
    merged = {**entry.defaults, **(inputs or {})}
    logger.info("验证命题 %s: %s", entry.id, entry.statement)
    return entry.run(merged, resolve_settings(settings))


# ---------------------------------------------------------------------------
# 场景与报告
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    id: str
    kind: str
    inputs: dict = field(default_factory=dict)
    proposition: Optional[str] = None
    asserted: bool = False
    expect: Any = None
    enabled: bool = True
    tolerance: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            id=str(data["id"]),
            kind=str(data["kind"]),
            inputs=dict(data.get("inputs") or {}),
            proposition=data.get("proposition"),
            asserted=bool(data.get("assert", False)),
            expect=data.get("expect"),
            enabled=bool(data.get("enabled", True)),
            tolerance=None if data.get("tolerance") is None else float(data["tolerance"]),
        )


@dataclass
class ScenarioResult:
    id: str
    kind: str
    status: str
    passed: bool
    asserted: bool
    evidence: Any = None
    artifacts: list = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return json_safe({
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "passed": self.passed,
            "asserted": self.asserted,
            "evidence": self.evidence,
            "artifacts": self.artifacts,
            "message": self.message,
        })


def config_hash(config: dict) -> str:
    """解析后配置的规范 JSON 的 sha256。"""
    canonical = json.dumps(json_safe(config), ensure_ascii=False, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunReport:
    scenarios: list
    config_hash: str
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    @property
    def exit_code(self) -> int:
        return 1 if any(r.asserted and not r.passed for r in self.scenarios) else 0

    def summary(self) -> dict:
        counts: dict[str, int] = {}
        for result in self.scenarios:
            counts[result.status] = counts.get(result.status, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config_hash": self.config_hash,
            "wall_time": self.wall_time,
            "summary": self.summary(),
            "scenarios": [result.to_dict() for result in self.scenarios],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def write(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / REPORT_NAME
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


# ---------------------------------------------------------------------------
# 运行器
# ---------------------------------------------------------------------------


SEMINORM_FAMILIES = (
    "stepanov", "weyl", "besicovitch", "besicovitch-lower", "weighted-ergodic",
    "stepanov-ergodic", "weyl-ergodic", "besicovitch-ergodic", "weyl-vanishing", "equi-weyl",
)


class ScenarioRunner:
    """按配置运行场景，事件与进度回调的约定同转换管线。"""

    def __init__(
        self,
        config: dict,
        settings: Optional[Settings] = None,
        out_dir: Optional[str] = None,
        jobs: int = 1,
        force_assert: bool = False,
        include_disabled: bool = False,
        event_callback: Optional[Callable[[dict[str, Any]], None]] = None,
        progress_callback: Optional[Callable[..., None]] = None,
    ):
        self.config = config
        self.settings = settings or Settings.from_config(config)
        self.out_dir = Path(out_dir or config.get("output", {}).get("out_dir") or "./output")
        self.jobs = max(1, int(jobs))
        self.force_assert = force_assert
        self.include_disabled = include_disabled
        self.event_callback = event_callback
        self.progress_callback = progress_callback
        self._lock = threading.Lock()
        self._done = 0

    def _emit_event(self, payload: dict[str, Any]) -> None:
        if self.event_callback:
            with self._lock:
                self.event_callback(payload)

    def _emit_logic_event(self, message: str, event_type: str = "scenario_detail", **details: Any) -> None:
        payload: dict[str, Any] = {"type": event_type, "message": message}
        for key, value in details.items():
            if value is not None:
                payload[key] = value
        self._emit_event(payload)

    def _report_progress(self, stage: str, current: int, total: int, message: str) -> None:
        if not self.progress_callback:
            return
        try:
            self.progress_callback(stage, current, total, message)
        except TypeError:
            self.progress_callback(stage, current, total)

    def scenarios(self, only: Optional[list[str]] = None, kinds: Optional[tuple] = None) -> list[Scenario]:
        items = [Scenario.from_dict(item) for item in self.config.get("scenarios") or []]
        if not self.include_disabled:
            items = [s for s in items if s.enabled]
        if only:
            missing = sorted(set(only) - {s.id for s in items})
            if missing:
                raise ScenarioError(f"配置中没有这些场景: {', '.join(missing)}")
            items = [s for s in items if s.id in only]
        if kinds:
            items = [s for s in items if s.kind in kinds]
        return items

    def run(self, only: Optional[list[str]] = None, kinds: Optional[tuple] = None) -> RunReport:
        started = time.perf_counter()
        scenarios = self.scenarios(only, kinds)
        total = len(scenarios)
        logger.info("=" * 50)
        logger.info("第 1 步：解析配置，共 %d 个场景", total)
        self._emit_logic_event(f"共 {total} 个场景", "run_started", total=total, jobs=self.jobs)

        logger.info("=" * 50)
        logger.info("第 2 步：执行场景（并行度 %d）", self.jobs)
        self._done = 0
        if self.jobs > 1 and total > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(lambda s: self._run_tracked(s, total), scenarios))
        else:
            results = [self._run_tracked(s, total) for s in scenarios]

        logger.info("=" * 50)
        logger.info("第 3 步：汇总报告")
        report = RunReport(results, config_hash(self.config), time.perf_counter() - started)
        self._emit_logic_event("运行结束", "run_finished", summary=report.summary(), exit_code=report.exit_code)
        return report

    def _run_tracked(self, scenario: Scenario, total: int) -> ScenarioResult:
        self._emit_logic_event(f"开始场景 {scenario.id}", "scenario_started", id=scenario.id, kind=scenario.kind)
        started = time.perf_counter()
        result = self.run_scenario(scenario)
        elapsed = time.perf_counter() - started
        with self._lock:
            self._done += 1
            done = self._done
        logger.info("场景 %s: %s (%.1f s)", scenario.id, result.status, elapsed)
        self._emit_logic_event(f"场景 {scenario.id} 完成", "scenario_finished",
                               id=scenario.id, status=result.status, passed=result.passed)
        self._report_progress("scenario", done, total, f"{scenario.id}: {result.status}")
        return result

    def run_scenario(self, scenario: Scenario) -> ScenarioResult:
        asserted = scenario.asserted or self.force_assert
        settings = self.settings if scenario.tolerance is None else self.settings.replace(tolerance=scenario.tolerance)
        handler = {
            "seminorm": self._run_seminorm,
            "classify": self._run_classify,
            "weights-check": self._run_weights_check,
            "convolve": self._run_convolve,
            "solve": self._run_solve,
            "verify-prop": self._run_verify,
        }.get(scenario.kind)
        if handler is None:
            return ScenarioResult(scenario.id, scenario.kind, "error", False, asserted,
                                  message=f"未知的场景类型: {scenario.kind}")
        try:
            status, passed, evidence, artifacts = handler(scenario, settings)
        except ScenarioError as exc:
            logger.error("场景 %s 无法执行: %s", scenario.id, exc)
            return ScenarioResult(scenario.id, scenario.kind, "error", False, asserted, message=str(exc))
        except SCENARIO_FAILURES as exc:
            logger.warning("场景 %s 失败: %s", scenario.id, exc)
            evidence = {"error": type(exc).__name__}
            if isinstance(exc, TailBoundError):
                evidence["required_length"] = exc.required_length
            return ScenarioResult(scenario.id, scenario.kind, "error", False, asserted, evidence, message=str(exc))
        return ScenarioResult(scenario.id, scenario.kind, status, passed, asserted, evidence, artifacts)

    def _artifact_dir(self, scenario: Scenario) -> Path:
        path = self.out_dir / scenario.id
        path.mkdir(parents=True, exist_ok=True)
        return path

    # --- 各类场景 ---

    def _run_seminorm(self, scenario: Scenario, settings: Settings):
        inputs = scenario.inputs
        family = inputs.get("family", "stepanov")
        if family not in SEMINORM_FAMILIES:
            raise ScenarioError(f"未知的范数族: {family}（可用: {', '.join(SEMINORM_FAMILIES)}）")
        f = parse_signal(_require(inputs, "signal"))
        p = float(inputs.get("p", 1.0))
        rho1, rho2 = parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2"))
        side = inputs.get("side", Side.TWO_SIDED.value)
        other = parse_signal(inputs["other"]) if "other" in inputs else None

        if family in ("stepanov", "weyl", "besicovitch"):
            value = SeminormSpec(p, family, side, float(inputs.get("length", 1.0))).evaluate(f, other, settings)
        elif family == "besicovitch-lower":
            value = seminorms.besicovitch_lower(f, p, float(inputs.get("t", 0.0)), settings)
        elif family == "weighted-ergodic":
            value = seminorms.weighted_ergodic_limit(f, rho1, rho2, settings, side)
        elif family == "stepanov-ergodic":
            value = seminorms.stepanov_ergodic(f, rho1, rho2, p, settings, side)
        elif family == "weyl-ergodic":
            value = seminorms.weyl_ergodic(f, rho1, rho2, p, settings)
        elif family == "besicovitch-ergodic":
            value = seminorms.besicovitch_ergodic(f, rho1, rho2, p, settings)
        elif family == "weyl-vanishing":
            value = seminorms.weyl_vanishing_limit(f, p, settings)
        else:
            value = seminorms.equi_weyl_limit(f, p, settings)

        artifacts = []
        if isinstance(value, LimitEstimate):
            path = self._artifact_dir(scenario) / "ladder.csv"
            value.to_csv(path)
            artifacts.append(str(path))
            number, converged = value.extrapolated, value.converged
        else:
            number, converged = float(value), math.isfinite(float(value))

        expect = scenario.expect
        if isinstance(expect, dict) and "value" in expect:
            tolerance = float(expect.get("tolerance", settings.tolerance))
            passed = converged and abs(number - float(expect["value"])) <= tolerance
        elif expect == "vanishing":
            passed = isinstance(value, LimitEstimate) and value.vanishing and value.converged
        else:
            passed = converged
        status = "pass" if passed else ("fail" if converged else "inconclusive")
        return status, passed, {"family": family, "value": number, "estimate": value}, artifacts

    def _run_classify(self, scenario: Scenario, settings: Settings):
        inputs = scenario.inputs
        f = parse_signal(_require(inputs, "signal"))
        split = None
        if "split" in inputs:
            split = (parse_signal(inputs["split"].get("g")), parse_signal(inputs["split"].get("q")))
        verdict = classify.membership(
            f, _require(inputs, "space"), split=split,
            rho1=parse_weight(inputs.get("rho1")), rho2=parse_weight(inputs.get("rho2")),
            p=float(inputs.get("p", 1.0)), sequence=inputs.get("sequence"),
            eps_schedule=inputs.get("eps_schedule"), settings=settings)
        expected = scenario.expect or classify.Verdict.MEMBER.value
        status = verdict.verdict.value
        return status, status == expected, verdict, []

    def _run_weights_check(self, scenario: Scenario, settings: Settings):
        inputs = scenario.inputs
        rho1, rho2 = parse_weight(inputs.get("rho1")), parse_weight(inputs.get("rho2"))
        shifts = inputs.get("shifts")
        report = classify.translation_invariance_check(
            rho1, rho2, None if shifts is None else [float(s) for s in shifts],
            parse_dominator(inputs.get("dominator")), settings)
        evidence = {"translation_invariance": report, "conditions": classify.weight_conditions_report(rho1, rho2, settings)}
        expected = scenario.expect or "pass"
        return report.status, report.status == expected, evidence, []

    def _convolution_task(self, inputs: dict, settings: Settings) -> volterra.ConvolutionTask:
        tail = inputs.get("tail_length")
        return volterra.ConvolutionTask(
            parse_kernel(_require(inputs, "kernel"), settings),
            parse_signal(_require(inputs, "forcing")),
            side=inputs.get("side", "infinite"),
            tail_length=None if tail is None else float(tail),
            tolerance=float(inputs.get("tolerance", settings.kernel_tail_tolerance)),
        )

    def _run_convolve(self, scenario: Scenario, settings: Settings):
        inputs = scenario.inputs
        task = self._convolution_task(inputs, settings)
        window = inputs.get("window", [-10.0, 10.0])
        grid = volterra.tabulate_convolution(task, window, inputs.get("step"), settings)
        path = self._artifact_dir(scenario) / "convolution.csv"
        grid.to_csv(path)
        evidence: dict[str, Any] = {"window": [grid.origin, grid.end], "sup": grid.sup_norm(),
                                    "tail_length": task.resolved_length() if task.side == "infinite" else None}
        passed = True
        expect = scenario.expect
        if isinstance(expect, dict) and "t" in expect:
            times = np.asarray(expect["t"], dtype=float)
            values = volterra.convolve(task, times, settings)
            target = np.asarray(expect["values"], dtype=float).reshape(values.shape)
            gap = float(np.max(np.abs(values - target)))
            passed = gap <= float(expect.get("tolerance", settings.tolerance))
            evidence.update({"points": times, "values": values, "gap": gap})
        return ("pass" if passed else "fail"), passed, evidence, [str(path)]

    def _run_solve(self, scenario: Scenario, settings: Settings):
        inputs = scenario.inputs
        kernel = parse_kernel(_require(inputs, "kernel"), settings)
        nonlinearity = parse_nonlinearity(inputs.get("nonlinearity"))
        run = volterra.semilinear_fixed_point(
            kernel, nonlinearity,
            window=inputs.get("window"), history=inputs.get("history"), step=inputs.get("step"),
            settings=settings)
        artifacts = []
        evidence: dict[str, Any] = {"run": run}
        if run.iterates:
            path = self._artifact_dir(scenario) / "trajectory.csv"
            run.trajectory_csv(path)
            artifacts.append(str(path))
        if isinstance(kernel, volterra.SubordinatedKernel) and run.converged and run.grid is not None:
            evidence["weyl_liouville_residual"] = volterra.weyl_liouville_residual(
                run.grid, kernel.gamma, kernel.model, nonlinearity, settings=settings,
                zero_history=True, start=run.solution.origin)
        expected = scenario.expect or "converged"
        status = "converged" if run.converged else ("diverged" if run.diverged else "nonconvergent")
        return status, status == expected, evidence, artifacts

    def _run_verify(self, scenario: Scenario, settings: Settings):
        proposition = scenario.proposition or scenario.inputs.get("proposition")
        if not proposition:
            raise ScenarioError(f"场景 {scenario.id} 缺少 proposition")
        report = verify(proposition, scenario.inputs, settings)
        expected = scenario.expect or "pass"
        return report.status, report.status == expected, report, []

