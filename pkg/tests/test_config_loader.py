from pathlib import Path

import pytest
import yaml

from wpaa.config_loader import (
    OUT_DIR_ENV,
    PROPOSITION_ALIASES,
    PROPOSITION_IDS,
    ConfigError,
    Settings,
    load_config,
    validate_config,
)
from wpaa.seminorms import weighted_ergodic
from wpaa.signals import Weight, constant


def make_config(**changes) -> dict:
    config = {
        "schema_version": 1,
        "settings": {},
        "output": {"out_dir": "./output"},
        "scenarios": [
            {"id": "stepanov-decay", "kind": "seminorm", "inputs": {"signal": "decay"}},
        ],
    }
    config.update(changes)
    return config


def write_config(tmp_path, config) -> str:
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config, allow_unicode=True), encoding="utf-8")
    return str(path)


def test_sectioned_settings_are_flattened():
    settings = Settings.from_config({"settings": {
        "tolerance": 1e-4,
        "ladder": {"levels": 6, "base": 2},
        "fixed_point": {"max_iter": 50},
        "weights": {"translation_shifts": [2, -1]},
    }})
    assert settings.tolerance == 1e-4
    assert settings.ladder_levels == 6 and settings.ladder_base == 2.0
    assert settings.fixed_point_max_iter == 50
    assert settings.translation_shifts == (2.0, -1.0)
    assert settings.ladder_max == 64.0


def test_unknown_settings_key_is_rejected():
    with pytest.raises(ConfigError, match="ladder_depth"):
        Settings.from_config({"settings": {"ladder": {"depth": 3}}})


def test_invalid_settings_value_is_rejected():
    with pytest.raises(ConfigError, match="取值非法"):
        Settings.from_config({"settings": {"tolerance": "tight"}})
    with pytest.raises(ConfigError, match="extrapolation.method"):
        Settings.from_config({"settings": {"extrapolation": {"method": "guess"}}})
    with pytest.raises(ConfigError, match="tail_rungs"):
        Settings.from_config({"settings": {"ladder": {"levels": 3, "tail_rungs": 4}}})


def test_with_ladder_max():
    settings = Settings().with_ladder_max(64.0)
    assert settings.ladder_levels == 5
    assert settings.ladder_max == 64.0
    assert Settings().with_ladder_max(100.0).ladder_max == 64.0
    with pytest.raises(ConfigError, match="ladder_max"):
        Settings().with_ladder_max(2.0)


def test_validate_config_accepts_minimal_config():
    validate_config(make_config())


def test_validate_config_rejects_schema_problems():
    with pytest.raises(ConfigError, match="schema_version"):
        validate_config(make_config(schema_version=2))
    with pytest.raises(ConfigError, match="顶层字段"):
        validate_config(make_config(plots=True))
    with pytest.raises(ConfigError, match="列表"):
        validate_config(make_config(scenarios={"id": "x"}))


def test_duplicate_scenario_ids_are_rejected():
    scenario = {"id": "same", "kind": "seminorm", "inputs": {"signal": "sin"}}
    with pytest.raises(ConfigError, match="重复"):
        validate_config(make_config(scenarios=[scenario, dict(scenario)]))


def test_scenario_kind_and_proposition_are_checked():
    with pytest.raises(ConfigError, match="kind"):
        validate_config(make_config(scenarios=[{"id": "x", "kind": "plot"}]))
    with pytest.raises(ConfigError, match="proposition"):
        validate_config(make_config(scenarios=[{"id": "x", "kind": "verify-prop"}]))
    with pytest.raises(ConfigError, match="inputs"):
        validate_config(make_config(scenarios=[{"id": "x", "kind": "seminorm", "inputs": [1]}]))


def test_load_config_from_file_with_overrides(tmp_path):
    path = write_config(tmp_path, make_config())
    config = load_config(path, {"out_dir": str(tmp_path / "out"), "settings": {"tolerance": 0.01}})
    assert config["output"]["out_dir"] == str(tmp_path / "out")
    assert Settings.from_config(config).tolerance == 0.01


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="不存在"):
        load_config(str(tmp_path / "absent.yaml"))


def test_load_config_reports_yaml_errors(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("settings: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(str(path))


def test_default_config_uses_out_dir_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "reports"))
    config = load_config()
    assert config["scenarios"] == []
    assert config["output"]["out_dir"] == str(tmp_path / "reports")


def test_load_config_finds_config_in_working_directory(tmp_path, monkeypatch):
    write_config(tmp_path, make_config())
    monkeypatch.chdir(tmp_path)
    config = load_config()
    assert [s["id"] for s in config["scenarios"]] == ["stepanov-decay"]


def test_schema_version_is_required():
    config = make_config()
    del config["schema_version"]
    with pytest.raises(ConfigError, match="schema_version"):
        validate_config(config)


def test_corpus_is_not_a_top_level_key():
    with pytest.raises(ConfigError, match="顶层字段"):
        validate_config(make_config(corpus={"signals": ["sin"]}))


def test_verify_prop_scenarios_must_name_registered_propositions():
    with pytest.raises(ConfigError, match="注册表"):
        validate_config(make_config(scenarios=[{"id": "x", "kind": "verify-prop", "proposition": "prop-99"}]))
    for name in ("fixed-point-lambda", "fixed-point-Λγ", "poisson-heat"):
        validate_config(make_config(scenarios=[{"id": "x", "kind": "verify-prop", "proposition": name}]))
    assert len(PROPOSITION_IDS) == 9
    assert set(PROPOSITION_ALIASES.values()) <= set(PROPOSITION_IDS)


def test_dominator_shift_settings():
    settings = Settings.from_config({"settings": {"weights": {"dominator_shift_max": 8, "dominator_shift_step": 2}}})
    assert settings.dominator_shift_max == 8.0 and settings.dominator_shift_step == 2.0
    with pytest.raises(ConfigError, match="dominator_shift_step"):
        Settings.from_config({"settings": {"weights": {"dominator_shift_max": 1, "dominator_shift_step": 2}}})


def test_example_config_documents_normalizations():
    example = Path(__file__).resolve().parent.parent / "config.example.yaml"
    line = next(row for row in example.read_text(encoding="utf-8").splitlines() if "ergodic_normalization" in row)
    assert "mean: 除以 ∫_{-T}^{T}ρ₁" in line and "halved: 除以 2∫_{-T}^{T}ρ₁" in line
    settings = Settings.from_config(load_config(str(example)))
    assert settings.ergodic_normalization == "mean"
    # ∫_{-1}^{1} 1 / ∫_{-1}^{1} (1+t²) = 2 / (8/3)
    value = weighted_ergodic(constant(1.0), Weight.polynomial(), Weight.constant(), 1.0, settings)
    assert value == pytest.approx(0.75, rel=1e-12)
