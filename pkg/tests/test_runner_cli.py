import json
import math

import pytest
import yaml
from click.testing import CliRunner

from wpaa.cli import cli
from wpaa.config_loader import PROPOSITION_IDS, Settings, load_config
from wpaa.runner import (
    REGISTRY,
    ScenarioError,
    ScenarioRunner,
    list_registry,
    parse_dominator,
    parse_signal,
    resolve_proposition,
    verify,
)

FAULT_SCENARIO = {
    "id": "fault-gaussian-weights",
    "kind": "weights-check",
    "inputs": {"rho1": "e^t^2", "rho2": "e^t^2"},
    "assert": True,
    "enabled": False,
}


def make_config(scenarios=None) -> dict:
    return {
        "schema_version": 1,
        "settings": {"ladder": {"levels": 8}},
        "output": {"out_dir": "./output"},
        "scenarios": scenarios or [],
    }


def stepanov_scenario(**changes) -> dict:
    scenario = {
        "id": "stepanov-decay",
        "kind": "seminorm",
        "inputs": {"family": "stepanov", "signal": "decay", "p": 1.0, "length": 1.0},
        "expect": {"value": 0.78694, "tolerance": 1e-4},
        "assert": True,
    }
    scenario.update(changes)
    return scenario


def make_runner(tmp_path, scenarios, **kwargs) -> ScenarioRunner:
    config = make_config(scenarios)
    return ScenarioRunner(config, Settings.from_config(config), out_dir=str(tmp_path / "out"), **kwargs)


def write_config(tmp_path, config) -> str:
    path = tmp_path / "bench.yaml"
    path.write_text(yaml.safe_dump(config, allow_unicode=True), encoding="utf-8")
    return str(path)


def test_registry_lists_all_propositions_in_order():
    entries = list_registry()
    assert len(entries) == 9
    assert entries[0]["id"] == "weyl-extension"
    assert entries[-1]["id"] == "poisson-heat"


def test_registry_filter_matches_tag_id_and_alias():
    assert [e["id"] for e in list_registry("conv")] == ["infinite-conv", "besicovitch-conv", "finite-conv"]
    assert [e["id"] for e in list_registry("poisson-heat")] == ["poisson-heat"]
    assert [e["id"] for e in list_registry("fixed-point-lambda")] == ["fixed-point-Λ"]
    assert list_registry("unknown") == []


def test_resolve_proposition_aliases_and_unknown_ids():
    assert resolve_proposition("fixed-point-lambda-gamma") is REGISTRY["fixed-point-Λγ"]
    with pytest.raises(ScenarioError, match="未知的命题"):
        resolve_proposition("lemma-0")


def test_registry_matches_config_vocabulary():
    assert tuple(REGISTRY) == PROPOSITION_IDS


@pytest.mark.parametrize("proposition", list(REGISTRY))
def test_every_registered_proposition_passes_with_defaults(proposition):
    report = verify(proposition)
    assert report.proposition == proposition
    assert report.status == "pass"


def test_runner_verifies_fixed_point_through_alias(tmp_path):
    scenario = {"id": "fixed-point", "kind": "verify-prop", "proposition": "fixed-point-lambda", "assert": True}
    report = make_runner(tmp_path, [scenario]).run()
    result = report.scenarios[0]
    assert result.status == "pass" and result.passed
    assert report.exit_code == 0


def test_parse_inputs():
    assert parse_signal(None).is_zero()
    assert parse_signal("sin").value_at(math.pi / 2)[0] == pytest.approx(1.0)
    with pytest.raises(ScenarioError, match="未知的信号名"):
        parse_signal("wavelet")
    dominator = parse_dominator([2.0, 0.0, 2.0])
    assert dominator(-1.0) == pytest.approx(4.0)
    assert parse_dominator(None) is None
    with pytest.raises(ScenarioError, match="dominator"):
        parse_dominator(["a"])


def test_runner_passes_stepanov_scenario(tmp_path):
    report = make_runner(tmp_path, [stepanov_scenario()]).run()
    assert report.exit_code == 0
    result = report.scenarios[0]
    assert result.status == "pass" and result.passed
    assert result.evidence["value"] == pytest.approx(0.78694, abs=1e-5)


def test_disabled_scenarios_are_skipped_unless_included(tmp_path):
    assert make_runner(tmp_path, [FAULT_SCENARIO]).run().scenarios == []
    report = make_runner(tmp_path, [FAULT_SCENARIO], include_disabled=True).run()
    assert report.scenarios[0].status == "fail"
    assert report.exit_code == 1


def test_expected_failures_become_error_results(tmp_path):
    scenarios = [
        stepanov_scenario(id="bad-family", inputs={"family": "sobolev", "signal": "sin"}),
        {
            "id": "short-tail",
            "kind": "convolve",
            "inputs": {"kernel": {"kind": "exponential"}, "forcing": "sin", "tail_length": 2.0,
                       "tolerance": 1e-9, "window": [0.0, 1.0]},
        },
    ]
    report = make_runner(tmp_path, scenarios).run()
    bad, short = report.scenarios
    assert bad.status == "error" and "范数族" in bad.message
    assert short.status == "error"
    assert short.evidence["error"] == "TailBoundError"
    assert short.evidence["required_length"] == 32.0
    # 只有 bad-family 是断言场景
    assert report.exit_code == 1
    assert report.summary() == {"error": 2}


def test_force_assert_applies_to_every_scenario(tmp_path):
    scenario = stepanov_scenario(expect={"value": 0.5, "tolerance": 1e-4}, **{"assert": False})
    assert make_runner(tmp_path, [scenario]).run().exit_code == 0
    assert make_runner(tmp_path, [scenario], force_assert=True).run().exit_code == 1


def test_only_filter_rejects_missing_ids(tmp_path):
    with pytest.raises(ScenarioError, match="ghost"):
        make_runner(tmp_path, [stepanov_scenario()]).run(only=["ghost"])


def test_events_and_progress_callbacks(tmp_path):
    events, progress = [], []
    runner = make_runner(
        tmp_path, [stepanov_scenario()],
        event_callback=events.append,
        progress_callback=lambda stage, current, total: progress.append((stage, current, total)),
    )
    runner.run()
    types = [event["type"] for event in events]
    assert types == ["run_started", "scenario_started", "scenario_finished", "run_finished"]
    assert progress == [("scenario", 1, 1)]


def test_parallel_run_keeps_scenario_order(tmp_path):
    scenarios = [stepanov_scenario(id=f"s{i}") for i in range(3)]
    report = make_runner(tmp_path, scenarios, jobs=3).run()
    assert [r.id for r in report.scenarios] == ["s0", "s1", "s2"]


def test_report_is_deterministic_apart_from_wall_time(tmp_path):
    scenarios = [stepanov_scenario()]
    first = make_runner(tmp_path, scenarios).run().to_dict()
    second = make_runner(tmp_path, scenarios).run().to_dict()
    first.pop("wall_time")
    second.pop("wall_time")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_cli_run_empty_config_writes_report(tmp_path):
    path = write_config(tmp_path, make_config())
    out_dir = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", path, "-o", str(out_dir)])
    assert result.exit_code == 0
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["scenarios"] == [] and report["schema_version"] == 1


def test_cli_run_exit_code_for_failed_assertion(tmp_path):
    path = write_config(tmp_path, make_config([FAULT_SCENARIO]))
    out_dir = tmp_path / "out"
    assert CliRunner().invoke(cli, ["run", path, "-o", str(out_dir)]).exit_code == 0
    result = CliRunner().invoke(cli, ["run", path, "-o", str(out_dir), "--include-disabled"])
    assert result.exit_code == 1
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert report["scenarios"][0]["id"] == "fault-gaussian-weights"
    assert report["summary"] == {"fail": 1}


def test_cli_run_exit_code_for_schema_error(tmp_path):
    config = make_config()
    config["schema_version"] = 3
    result = CliRunner().invoke(cli, ["run", write_config(tmp_path, config)])
    assert result.exit_code == 2


def test_cli_convolve_only_runs_convolution_scenarios(tmp_path):
    scenarios = [
        stepanov_scenario(),
        {
            "id": "convolve-sin",
            "kind": "convolve",
            "inputs": {"kernel": {"kind": "exponential"}, "forcing": "sin", "window": [0.0, 2.0]},
            "expect": {"t": [0.0, 1.5707963267948966], "values": [-0.5, 0.5], "tolerance": 1e-8},
            "assert": True,
        },
    ]
    out_dir = tmp_path / "out"
    result = CliRunner().invoke(cli, ["convolve", write_config(tmp_path, make_config(scenarios)), "-o", str(out_dir)])
    assert result.exit_code == 0
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert [s["id"] for s in report["scenarios"]] == ["convolve-sin"]
    assert (out_dir / "convolve-sin" / "convolution.csv").exists()


def test_cli_list_registry_json():
    result = CliRunner().invoke(cli, ["list-registry", "conv", "--json"])
    assert result.exit_code == 0
    entries = json.loads(result.output)
    assert [e["id"] for e in entries] == ["infinite-conv", "besicovitch-conv", "finite-conv"]


def test_cli_verify_unknown_proposition_fails(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = CliRunner().invoke(cli, ["verify", "lemma-0"])
    assert result.exit_code == 1


def test_cli_verify_translation_invariance(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = CliRunner().invoke(cli, ["verify", "translation-invariance", "--assert", "--ladder-max", "512"])
    assert result.exit_code == 0


def test_cli_init_copies_example_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = CliRunner().invoke(cli, ["init"])
    assert result.exit_code == 0
    config = load_config(str(tmp_path / "config.yaml"))
    ids = [s["id"] for s in config["scenarios"]]
    assert "stepanov-decay" in ids and "fault-gaussian-weights" in ids


def test_cli_run_rejects_unregistered_proposition(tmp_path):
    config = make_config([{"id": "x", "kind": "verify-prop", "proposition": "lemma-0"}])
    result = CliRunner().invoke(cli, ["run", write_config(tmp_path, config)])
    assert result.exit_code == 2
