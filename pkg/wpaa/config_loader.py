"""
共享配置加载器，供 CLI 与场景运行器共用。

配置为 YAML 树：schema_version / settings / output / scenarios。
数值参数统一收敛到不可变的 Settings，命令行参数通过 Settings.replace 覆盖。
"""

import copy
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUT_DIR_ENV = "WPAA_OUT_DIR"
SCENARIO_KINDS = ("seminorm", "classify", "weights-check", "convolve", "solve", "verify-prop")
PROPOSITION_IDS = (
    "weyl-extension", "conv-invariance", "translation-invariance", "infinite-conv", "besicovitch-conv",
    "finite-conv", "fixed-point-Λ", "fixed-point-Λγ", "poisson-heat",
)
PROPOSITION_ALIASES = {
    "fixed-point-lambda": "fixed-point-Λ",
    "fixed-point-lambda-gamma": "fixed-point-Λγ",
}
EXTRAPOLATION_METHODS = ("tail-mean", "tail-max", "richardson")
NORMALIZATIONS = ("mean", "halved")


class ConfigError(ValueError):
    """配置文件不符合 schema。"""


@dataclass(frozen=True)
class Settings:
    """所有估计器共用的数值参数。"""

    tolerance: float = 1e-3
    special_tolerance: float = 1e-10
    # 阶梯 T, l ∈ {base·2^k}
    ladder_base: float = 4.0
    ladder_levels: int = 11
    tail_rungs: int = 4
    inner_levels: int = 5
    vanishing_t_levels: int = 7
    extrapolation_method: str = "tail-mean"
    decay_exponent: float = -0.5
    inner_decay_floor: float = 0.1
    zero_floor: float = 1e-13
    # sup 扫描与求积
    scan_x_max: float = 64.0
    scan_step_fraction: float = 0.125
    quad_order: int = 16
    panel_fraction: float = 0.25
    far_panel: float = 1.0
    outer_panels: int = 32
    ergodic_normalization: str = "mean"
    # ε-周期普查与序列检验
    census_min_period: float = 1.0
    census_tau_step: float = 0.02
    census_t_span: float = 32.0
    census_t_points: int = 321
    census_scan_range: float = 1000.0
    census_gap_fraction: float = 0.125
    census_max_refinements: int = 2000
    aa_t_span: float = 8.0
    aa_t_points: int = 129
    sp_window_step: float = 0.5
    min_subsequence: int = 3
    # 特殊函数与算子族
    wright_switch: float = 10.0
    wright_max_terms: int = 2000
    wright_tail: float = 1e-15
    contour_tail: float = 1e-14
    mn_grid_step: float = 0.0625
    sup_scan: float = 16.0
    # Volterra 与不动点
    fixed_point_step: float = 2.0 ** -6
    fixed_point_window: float = 32.0
    fixed_point_history: float = 64.0
    fixed_point_tolerance: float = 1e-10
    fixed_point_max_iter: int = 200
    convolution_step: float = 1.0 / 32.0
    kernel_tail_tolerance: float = 1e-12
    bound_slack: float = 1e-3
    translation_shifts: tuple[float, ...] = (1.0, -3.0)
    dominator_levels: int = 6
    dominator_shift_max: float = 16.0
    dominator_shift_step: float = 0.5

    def ladder(self, levels: Optional[int] = None) -> np.ndarray:
        count = self.ladder_levels if levels is None else levels
        return self.ladder_base * 2.0 ** np.arange(count)

    @property
    def ladder_max(self) -> float:
        return float(self.ladder_base * 2.0 ** (self.ladder_levels - 1))

    def with_ladder_max(self, ladder_max: float) -> "Settings":
        if ladder_max < self.ladder_base:
            raise ConfigError(f"ladder_max={ladder_max} 小于阶梯起点 {self.ladder_base}")
        levels = int(np.floor(np.log2(ladder_max / self.ladder_base) + 1e-9)) + 1
        return self.replace(ladder_levels=max(levels, 2))

    def replace(self, **changes: Any) -> "Settings":
        return replace(self, **changes)

    def inner_reach(self) -> float:
        """嵌套极限（Weyl / Besicovitch）最宽窗口所需的半径。"""
        inner_max = (self.ladder_max + self.ladder_base) * 2.0 ** (self.inner_levels - 1)
        return inner_max + self.ladder_max + 2.0

    @classmethod
    def from_config(cls, config: Optional[dict]) -> "Settings":
        section = (config or {}).get("settings", {}) or {}
        if not isinstance(section, dict):
            raise ConfigError("settings 必须是映射")
        flat: dict[str, Any] = {}
        for key, value in section.items():
            if isinstance(value, dict):
                for sub_key, sub_value in value.items():
                    flat[_SECTION_KEYS.get((key, sub_key), f"{key}_{sub_key}")] = sub_value
            else:
                flat[_SECTION_KEYS.get((None, key), key)] = value

        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(flat) - set(known))
        if unknown:
            raise ConfigError(f"未知的 settings 字段: {', '.join(unknown)}")

        values: dict[str, Any] = {}
        defaults = cls()
        for name, raw in flat.items():
            current = getattr(defaults, name)
            try:
                if isinstance(current, bool):
                    values[name] = bool(raw)
                elif isinstance(current, int):
                    values[name] = int(raw)
                elif isinstance(current, float):
                    values[name] = float(raw)
                elif isinstance(current, tuple):
                    values[name] = tuple(float(item) for item in raw)
                else:
                    values[name] = str(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"settings.{name} 取值非法: {raw!r}") from exc

        settings = replace(defaults, **values)
        settings.validate()
        return settings

    def validate(self) -> None:
        if self.tolerance <= 0 or self.special_tolerance <= 0:
            raise ConfigError("tolerance 必须为正")
        if self.ladder_base <= 0 or self.ladder_levels < 2:
            raise ConfigError("阶梯至少需要两级且 base > 0")
        if not 2 <= self.tail_rungs <= self.ladder_levels:
            raise ConfigError("tail_rungs 必须介于 2 与 ladder_levels 之间")
        if self.inner_levels < 3:
            raise ConfigError("inner_levels 至少为 3")
        if self.extrapolation_method not in EXTRAPOLATION_METHODS:
            raise ConfigError(f"extrapolation.method 只能是 {EXTRAPOLATION_METHODS}")
        if self.ergodic_normalization not in NORMALIZATIONS:
            raise ConfigError(f"ergodic_normalization 只能是 {NORMALIZATIONS}")
        if self.quad_order < 2:
            raise ConfigError("quadrature.order 至少为 2")
        if not 0 < self.scan_step_fraction <= 1 or not 0 < self.panel_fraction <= 1:
            raise ConfigError("scan.step_fraction 与 quadrature.panel_fraction 必须在 (0, 1]")
        if self.fixed_point_step <= 0 or self.fixed_point_window <= 0:
            raise ConfigError("fixed_point.step 与 fixed_point.window 必须为正")
        if not 0 < self.dominator_shift_step <= self.dominator_shift_max:
            raise ConfigError("weights.dominator_shift_step 必须为正且不超过 dominator_shift_max")


# YAML 分节键 → Settings 字段名
_SECTION_KEYS = {
    ("ladder", "base"): "ladder_base",
    ("ladder", "levels"): "ladder_levels",
    ("ladder", "tail_rungs"): "tail_rungs",
    ("ladder", "inner_levels"): "inner_levels",
    ("ladder", "vanishing_t_levels"): "vanishing_t_levels",
    ("extrapolation", "method"): "extrapolation_method",
    ("extrapolation", "decay_exponent"): "decay_exponent",
    ("extrapolation", "inner_decay_floor"): "inner_decay_floor",
    ("extrapolation", "zero_floor"): "zero_floor",
    ("scan", "x_max"): "scan_x_max",
    ("scan", "step_fraction"): "scan_step_fraction",
    ("quadrature", "order"): "quad_order",
    ("quadrature", "panel_fraction"): "panel_fraction",
    ("quadrature", "far_panel"): "far_panel",
    ("quadrature", "outer_panels"): "outer_panels",
    ("census", "min_period"): "census_min_period",
    ("census", "tau_step"): "census_tau_step",
    ("census", "t_span"): "census_t_span",
    ("census", "t_points"): "census_t_points",
    ("census", "scan_range"): "census_scan_range",
    ("census", "gap_fraction"): "census_gap_fraction",
    ("census", "max_refinements"): "census_max_refinements",
    ("sequence", "t_span"): "aa_t_span",
    ("sequence", "t_points"): "aa_t_points",
    ("sequence", "window_step"): "sp_window_step",
    ("sequence", "min_subsequence"): "min_subsequence",
    ("wright", "switch_point"): "wright_switch",
    ("wright", "max_terms"): "wright_max_terms",
    ("wright", "tail"): "wright_tail",
    ("contour", "tail"): "contour_tail",
    ("constants", "grid_step"): "mn_grid_step",
    ("constants", "sup_scan"): "sup_scan",
    ("fixed_point", "step"): "fixed_point_step",
    ("fixed_point", "window"): "fixed_point_window",
    ("fixed_point", "history"): "fixed_point_history",
    ("fixed_point", "tolerance"): "fixed_point_tolerance",
    ("fixed_point", "max_iter"): "fixed_point_max_iter",
    ("convolution", "step"): "convolution_step",
    ("convolution", "tail_tolerance"): "kernel_tail_tolerance",
    ("convolution", "bound_slack"): "bound_slack",
    ("weights", "translation_shifts"): "translation_shifts",
    ("weights", "dominator_levels"): "dominator_levels",
    ("weights", "dominator_shift_max"): "dominator_shift_max",
    ("weights", "dominator_shift_step"): "dominator_shift_step",
}

DEFAULT_SETTINGS = Settings()


def resolve_settings(settings: Optional[Settings]) -> Settings:
    return DEFAULT_SETTINGS if settings is None else settings


def default_config() -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "settings": {},
        "output": {"out_dir": os.environ.get(OUT_DIR_ENV, "./output")},
        "scenarios": [],
    }


def load_config(config_path: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    """加载配置文件，做 schema 校验并应用覆盖项。"""
    if config_path is None:
        search_paths = [
            Path("config.yaml"),
            Path("config.yml"),
            Path.home() / ".wpaa" / "config.yaml",
        ]
        for path in search_paths:
            if path.exists():
                config_path = str(path)
                break

    if config_path and Path(config_path).exists():
        with open(config_path, "r", encoding="utf-8") as file:
            try:
                config = yaml.safe_load(file)
            except yaml.YAMLError as exc:
                raise ConfigError(f"YAML 解析失败: {exc}") from exc
        if config is None:
            config = {}
        logger.info("已加载配置: %s", config_path)
    elif config_path:
        raise ConfigError(f"配置文件不存在: {config_path}")
    else:
        config = default_config()
        logger.warning("未找到配置文件，使用默认配置")

    if not isinstance(config, dict):
        raise ConfigError("配置顶层必须是映射")
    config = copy.deepcopy(config)
    config.setdefault("settings", {})
    config.setdefault("output", {})
    config.setdefault("scenarios", [])
    if not config["output"].get("out_dir"):
        config["output"]["out_dir"] = os.environ.get(OUT_DIR_ENV, "./output")

    if overrides:
        settings_overrides = overrides.get("settings", {})
        for key, value in settings_overrides.items():
            config["settings"][key] = value
        if overrides.get("out_dir"):
            config["output"]["out_dir"] = overrides["out_dir"]

    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    """schema 校验；不合法时抛出 ConfigError。"""
    if "schema_version" not in config:
        raise ConfigError("配置缺少 schema_version")
    version = config["schema_version"]
    if version != SCHEMA_VERSION:
        raise ConfigError(f"不支持的 schema_version: {version!r}（当前 {SCHEMA_VERSION}）")

    allowed_top = {"schema_version", "settings", "output", "scenarios"}
    extra = sorted(set(config) - allowed_top)
    if extra:
        raise ConfigError(f"未知的顶层字段: {', '.join(extra)}")

    Settings.from_config(config)

    scenarios = config.get("scenarios") or []
    if not isinstance(scenarios, list):
        raise ConfigError("scenarios 必须是列表")
    seen: set[str] = set()
    for index, item in enumerate(scenarios):
        if not isinstance(item, dict):
            raise ConfigError(f"scenarios[{index}] 必须是映射")
        scenario_id = item.get("id")
        if not scenario_id or not isinstance(scenario_id, str):
            raise ConfigError(f"scenarios[{index}] 缺少字符串 id")
        if scenario_id in seen:
            raise ConfigError(f"场景 id 重复: {scenario_id}")
        seen.add(scenario_id)
        kind = item.get("kind")
        if kind not in SCENARIO_KINDS:
            raise ConfigError(f"场景 {scenario_id} 的 kind 非法: {kind!r}")
        inputs = item.get("inputs", {})
        if not isinstance(inputs, dict):
            raise ConfigError(f"场景 {scenario_id} 的 inputs 必须是映射")
        if kind == "verify-prop":
            proposition = item.get("proposition") or inputs.get("proposition")
            if not proposition or not isinstance(proposition, str):
                raise ConfigError(f"场景 {scenario_id} 缺少 proposition")
            if PROPOSITION_ALIASES.get(proposition, proposition) not in PROPOSITION_IDS:
                raise ConfigError(f"场景 {scenario_id} 的 proposition 不在注册表中: {proposition!r}")
