#!/usr/bin/env python3
"""
wpaa - 命令行入口

用法:
    python main.py run config.yaml --out-dir output/
    python main.py run config.yaml --jobs 4 --assert
    python main.py classify sin AP
    python main.py norms sin+decay -p 2
    python main.py verify infinite-conv --ladder-max 256
    python main.py list-registry conv
"""

import json
import logging
import shutil
import sys
from pathlib import Path
from typing import Any, Optional

import click
import yaml
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from wpaa import classify, seminorms
from wpaa.config_loader import ConfigError, Settings, load_config
from wpaa.runner import (
    SCENARIO_FAILURES,
    SIGNAL_CORPUS,
    RunReport,
    ScenarioError,
    ScenarioRunner,
    list_registry,
    parse_signal,
    parse_weight,
    verify as verify_proposition,
)
from wpaa.seminorms import json_safe

console = Console()

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    handlers=[RichHandler(console=console, rich_tracebacks=True)],
)
logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_CONFIG = 2


def _settings_options(func):
    """--config / --tolerance / --ladder-max 三个共用选项。"""
    func = click.option("--ladder-max", type=float, default=None, help="阶梯最大值 T（覆盖配置）")(func)
    func = click.option("--tolerance", type=float, default=None, help="判定容差（覆盖配置）")(func)
    func = click.option("-c", "--config", "config_path", default=None, help="配置文件路径")(func)
    return func


def _load(config_path: Optional[str], tolerance: Optional[float], ladder_max: Optional[float],
          out_dir: Optional[str] = None) -> tuple[dict, Settings]:
    """加载配置并应用命令行覆盖；schema 不合法时以退出码 2 结束。"""
    try:
        config = load_config(config_path, {"out_dir": out_dir} if out_dir else None)
        settings = Settings.from_config(config)
        if tolerance is not None:
            settings = settings.replace(tolerance=tolerance)
        if ladder_max is not None:
            settings = settings.with_ladder_max(ladder_max)
        settings.validate()
    except ConfigError as e:
        console.print(f"[bold red]❌ 配置错误: {e}[/]")
        sys.exit(EXIT_CONFIG)
    return config, settings


def _parse_text(text: str) -> Any:
    """命令行里的信号：语料名、YAML 文件路径或内联 YAML。"""
    if text in SIGNAL_CORPUS:
        return text
    path = Path(text)
    if path.exists():
        with open(path, "r", encoding="utf-8") as file:
            return yaml.safe_load(file)
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise click.BadParameter(f"无法解析: {exc}") from exc


def _print_json(payload: Any) -> None:
    click.echo(json.dumps(json_safe(payload), ensure_ascii=False, indent=2, sort_keys=True))


def _status_style(status: str) -> str:
    return {
        "pass": "green", "member": "green", "converged": "green",
        "fail": "red", "non-member": "red", "error": "red", "diverged": "red",
        "hypothesis-violated": "magenta",
    }.get(status, "yellow")


def _print_report(report: RunReport) -> None:
    table = Table(title="场景结果", border_style="cyan")
    table.add_column("场景", style="bold")
    table.add_column("类型")
    table.add_column("状态")
    table.add_column("断言", justify="center")
    table.add_column("说明")
    for result in report.scenarios:
        style = _status_style(result.status)
        mark = ("✅" if result.passed else "❌") if result.asserted else "-"
        table.add_row(result.id, result.kind, f"[{style}]{result.status}[/]", mark, result.message)
    console.print(table)
    console.print(f"[dim]config_hash: {report.config_hash}  用时 {report.wall_time:.1f} s[/]")


def _print_proposition(report) -> None:
    style = _status_style(report.status)
    table = Table(title=f"命题 {report.proposition}", border_style="cyan")
    table.add_column("项目", style="bold")
    table.add_column("类别")
    table.add_column("结果")
    for item in report.hypotheses:
        table.add_row(item["name"], "假设", str(item["holds"]))
    for item in report.checks:
        table.add_row(item["name"], "检查", str(item["passed"]))
    console.print(table)
    for note in report.notes:
        console.print(f"[dim]* {note}[/]")
    console.print(f"状态: [bold {style}]{report.status}[/]")


def _run_batch(config_path: str, tolerance, ladder_max, out_dir, force_assert: bool, jobs: int,
               only: tuple, include_disabled: bool, as_json: bool, kinds: Optional[tuple] = None) -> None:
    config, settings = _load(config_path, tolerance, ladder_max, out_dir)
    if as_json:
        logging.getLogger("wpaa").setLevel(logging.WARNING)
    runner = ScenarioRunner(config, settings, jobs=jobs, force_assert=force_assert,
                            include_disabled=include_disabled)
    if not as_json:
        console.print(Panel.fit(
            f"[bold cyan]wpaa[/]\n\n"
            f"📄 配置: {config_path}\n"
            f"📂 输出: {runner.out_dir}",
            title="场景批量运行",
            border_style="blue",
        ))
    try:
        report = runner.run(list(only) or None, kinds)
        path = report.write(runner.out_dir)
    except ScenarioError as e:
        console.print(f"[bold red]❌ {e}[/]")
        sys.exit(EXIT_FAILED)
    except Exception as e:
        console.print(f"\n[bold red]❌ 运行失败: {e}[/]")
        logger.exception("详细错误信息")
        sys.exit(EXIT_FAILED)

    if as_json:
        click.echo(report.to_json())
    else:
        _print_report(report)
        console.print(f"\n📝 报告: {path}")
    sys.exit(report.exit_code)


def _batch_options(func):
    func = click.option("--json", "as_json", is_flag=True, help="以 JSON 输出报告")(func)
    func = click.option("--include-disabled", is_flag=True, help="同时运行 enabled: false 的场景")(func)
    func = click.option("--only", multiple=True, help="只运行指定 id 的场景（可重复）")(func)
    func = click.option("-j", "--jobs", type=int, default=1, show_default=True, help="场景并行数")(func)
    func = click.option("--assert", "force_assert", is_flag=True, help="把所有场景视为断言")(func)
    func = click.option("-o", "--out-dir", default=None, help="输出目录（默认: $WPAA_OUT_DIR 或 ./output）")(func)
    func = click.option("--ladder-max", type=float, default=None, help="阶梯最大值 T（覆盖配置）")(func)
    func = click.option("--tolerance", type=float, default=None, help="判定容差（覆盖配置）")(func)
    return func


@click.group()
def cli():
    """wpaa - 加权伪概自守性检验工具"""
    pass


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@_batch_options
def run(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json):
    """运行配置中的全部场景"""
    _run_batch(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json)


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@_batch_options
def convolve(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json):
    """只运行配置中的卷积场景"""
    _run_batch(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json,
               kinds=("convolve",))


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@_batch_options
def solve(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json):
    """只运行配置中的不动点场景"""
    _run_batch(config_path, tolerance, ladder_max, out_dir, force_assert, jobs, only, include_disabled, as_json,
               kinds=("solve",))


@cli.command(name="classify")
@click.argument("signal")
@click.argument("space", type=click.Choice(list(classify.SPACES) + list(classify.PSEUDO_SPACES)))
@click.option("--g", "g_text", default=None, help="伪空间分解中的回归部分")
@click.option("--q", "q_text", default=None, help="伪空间分解中的遍历部分")
@click.option("--rho1", default="1", show_default=True, help="权函数 ρ₁（1 | 1+t^2 | e^t^2 | YAML）")
@click.option("--rho2", default="1", show_default=True, help="权函数 ρ₂")
@click.option("-p", "p", type=float, default=1.0, show_default=True, help="指数 p")
@click.option("--expect", default=None, type=click.Choice([v.value for v in classify.Verdict]), help="期望结论")
@click.option("--assert", "force_assert", is_flag=True, help="结论与期望不符时退出码为 1")
@click.option("--json", "as_json", is_flag=True, help="以 JSON 输出")
@_settings_options
def classify_command(signal, space, g_text, q_text, rho1, rho2, p, expect, force_assert, as_json,
                     config_path, tolerance, ladder_max):
    """判定信号是否属于给定空间"""
    _, settings = _load(config_path, tolerance, ladder_max)
    try:
        f = parse_signal(_parse_text(signal))
        split = None
        if g_text is not None or q_text is not None:
            split = (parse_signal(_parse_text(g_text) if g_text else None),
                     parse_signal(_parse_text(q_text) if q_text else None))
        verdict = classify.membership(f, space, split=split, rho1=parse_weight(_parse_text(rho1)),
                                      rho2=parse_weight(_parse_text(rho2)), p=p, settings=settings)
    except (ScenarioError, *SCENARIO_FAILURES) as e:
        console.print(f"[bold red]❌ {e}[/]")
        sys.exit(EXIT_FAILED)

    if as_json:
        _print_json(verdict)
    else:
        style = _status_style(verdict.verdict.value)
        console.print(Panel.fit(
            f"空间: [bold]{space}[/]\n"
            f"结论: [bold {style}]{verdict.verdict.value}[/]\n"
            f"依据: {verdict.reason}",
            title="成员判定",
            border_style="blue",
        ))
    expected = expect or classify.Verdict.MEMBER.value
    if force_assert and verdict.verdict.value != expected:
        sys.exit(EXIT_FAILED)


@cli.command()
@click.argument("signal")
@click.option("-p", "p", type=float, default=1.0, show_default=True, help="指数 p")
@click.option("--rho1", default="1", show_default=True, help="权函数 ρ₁")
@click.option("--rho2", default="1", show_default=True, help="权函数 ρ₂")
@click.option("--json", "as_json", is_flag=True, help="以 JSON 输出")
@_settings_options
def norms(signal, p, rho1, rho2, as_json, config_path, tolerance, ladder_max):
    """计算 Stepanov / Weyl / Besicovitch 半范与加权遍历泛函"""
    _, settings = _load(config_path, tolerance, ladder_max)
    try:
        f = parse_signal(_parse_text(signal))
        weights = (parse_weight(_parse_text(rho1)), parse_weight(_parse_text(rho2)))
        results = {
            "stepanov": seminorms.stepanov_norm(f, p, settings),
            "weyl": seminorms.weyl_distance(f, None, p, settings),
            "besicovitch_upper": seminorms.besicovitch_upper(f, p, 0.0, settings),
            "weighted_ergodic": seminorms.weighted_ergodic_limit(f, *weights, settings),
        }
    except (ScenarioError, *SCENARIO_FAILURES) as e:
        console.print(f"[bold red]❌ {e}[/]")
        sys.exit(EXIT_FAILED)

    if as_json:
        _print_json(results)
        return
    table = Table(title=f"半范 (p={p:g})", border_style="cyan")
    table.add_column("量", style="bold")
    table.add_column("值", justify="right")
    table.add_column("收敛", justify="center")
    for name, value in results.items():
        if isinstance(value, seminorms.LimitEstimate):
            table.add_row(name, f"{value.extrapolated:.6g}", "✅" if value.converged else "⚠️")
        else:
            table.add_row(name, f"{value:.6g}", "-")
    console.print(table)


@cli.command()
@click.argument("proposition")
@click.option("-i", "--inputs", "inputs_text", default=None, help="覆盖默认输入的 YAML（文件或内联）")
@click.option("--assert", "force_assert", is_flag=True, help="状态不是 pass 时退出码为 1")
@click.option("--json", "as_json", is_flag=True, help="以 JSON 输出")
@_settings_options
def verify(proposition, inputs_text, force_assert, as_json, config_path, tolerance, ladder_max):
    """运行注册表中的一个命题"""
    _, settings = _load(config_path, tolerance, ladder_max)
    inputs = _parse_text(inputs_text) if inputs_text else None
    if inputs is not None and not isinstance(inputs, dict):
        raise click.BadParameter("--inputs 必须是映射")
    try:
        report = verify_proposition(proposition, inputs, settings)
    except (ScenarioError, *SCENARIO_FAILURES) as e:
        console.print(f"[bold red]❌ {e}[/]")
        sys.exit(EXIT_FAILED)
    except Exception as e:
        console.print(f"\n[bold red]❌ 验证失败: {e}[/]")
        logger.exception("详细错误信息")
        sys.exit(EXIT_FAILED)

    if as_json:
        _print_json(report)
    else:
        _print_proposition(report)
    if force_assert and report.status != "pass":
        sys.exit(EXIT_FAILED)


@cli.command(name="list-registry")
@click.argument("filter_text", required=False)
@click.option("--json", "as_json", is_flag=True, help="以 JSON 输出")
def list_registry_command(filter_text, as_json):
    """列出命题注册表"""
    entries = list_registry(filter_text)
    if as_json:
        _print_json(entries)
        return
    table = Table(title="命题注册表")
    table.add_column("id", style="cyan bold")
    table.add_column("标签", style="green")
    table.add_column("内容")
    for entry in entries:
        table.add_row(entry["id"], ", ".join(entry["tags"]), entry["statement"])
    console.print(table)
    console.print(f"共 {len(entries)} 条")


@cli.command()
def init():
    """生成默认配置文件"""
    config_file = Path("config.yaml")
    example_file = Path(__file__).resolve().parent.parent / "config.example.yaml"

    if config_file.exists():
        if not click.confirm("config.yaml 已存在，是否覆盖?"):
            return

    if example_file.exists():
        shutil.copy(example_file, config_file)
    else:
        # 内联生成
        config_file.write_text(
            "# wpaa 配置\n"
            "# 详见 config.example.yaml\n\n"
            "schema_version: 1\n"
            "settings: {}\n"
            "output:\n"
            "  out_dir: ./output\n"
            "scenarios: []\n",
            encoding="utf-8",
        )

    console.print(f"[green]✅ 已生成配置文件: {config_file}[/]")
    console.print("编辑 scenarios 后运行: python main.py run config.yaml")


if __name__ == "__main__":
    cli()
