"""Config loading: strict schema, defaults, echo round-trip."""

import json

import jsonschema
import pytest

from hypcert.config import (
    config_schema,
    load_config,
    runconfig_from_dict,
)
from hypcert.errors import ConfigError


def minimal(family="doubling", **extra):
    raw = {"model": {"family": family}, "seed": 7}
    if family in ("perturbed_doubling", "perturbed_cat"):
        raw["model"]["s"] = 0.5
    raw.update(extra)
    return raw


def test_minimal_doubling_defaults():
    cfg = runconfig_from_dict(minimal())
    assert cfg.family == "doubling"
    assert cfg.s is None
    assert cfg.seed == 7
    assert cfg.max_period == 6
    assert cfg.conorm_grid == 4096
    assert cfg.pliss_prime_exponent == 0.5
    assert cfg.metric_horizon == 8
    assert cfg.shadow_trials == 50
    assert cfg.shadow_alphas == (1e-2, 1e-3)
    assert cfg.conjugacy_enabled is True  # circle family default
    assert cfg.conjugacy_resolution == 4096
    assert cfg.report_dir == "reports"
    assert cfg.basename == "certification"
    assert cfg.is_circle


def test_torus_defaults_differ():
    cfg = runconfig_from_dict(minimal("cat_map"))
    assert cfg.conorm_grid == 96
    assert cfg.conjugacy_enabled is False
    assert not cfg.is_circle


def test_seed_is_mandatory():
    raw = minimal()
    del raw["seed"]
    with pytest.raises(ConfigError, match="seed.*required"):
        runconfig_from_dict(raw)


def test_seed_range_and_type():
    with pytest.raises(ConfigError, match="seed"):
        runconfig_from_dict(minimal(seed=-1))
    with pytest.raises(ConfigError, match="seed"):
        runconfig_from_dict(minimal(seed=2 ** 64))
    with pytest.raises(ConfigError, match="seed"):
        runconfig_from_dict(minimal(seed=True))
    assert runconfig_from_dict(minimal(seed=2 ** 64 - 1)).seed == 2 ** 64 - 1


def test_max_period_zero_names_the_field():
    with pytest.raises(ConfigError, match="max_period"):
        runconfig_from_dict(minimal(max_period=0))


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ConfigError, match="unknown config key"):
        runconfig_from_dict(minimal(bogus=1))
    with pytest.raises(ConfigError, match="pliss.bogus"):
        runconfig_from_dict(minimal(pliss={"bogus": 1}))


def test_parameter_required_for_perturbed_families():
    raw = {"model": {"family": "perturbed_doubling"}, "seed": 1}
    with pytest.raises(ConfigError, match="model.s"):
        runconfig_from_dict(raw)


def test_parameter_forbidden_for_fixed_families():
    raw = {"model": {"family": "doubling", "s": 1.0}, "seed": 1}
    with pytest.raises(ConfigError, match="model.s"):
        runconfig_from_dict(raw)


def test_unknown_family_rejected():
    with pytest.raises(ConfigError, match="model.family"):
        runconfig_from_dict({"model": {"family": "horseshoe"}, "seed": 1})


def test_prime_exponent_open_interval():
    for bad in [0.0, 1.0, -0.5, 2.0]:
        with pytest.raises(ConfigError, match="prime_exponent"):
            runconfig_from_dict(minimal(pliss={"prime_exponent": bad}))
    cfg = runconfig_from_dict(minimal(pliss={"prime_exponent": 0.25}))
    assert cfg.pliss_prime_exponent == 0.25


def test_alphas_validation():
    with pytest.raises(ConfigError, match="alphas"):
        runconfig_from_dict(minimal(shadowing={"alphas": []}))
    with pytest.raises(ConfigError, match=r"alphas\[1\]"):
        runconfig_from_dict(minimal(shadowing={"alphas": [1e-2, 0.0]}))
    with pytest.raises(ConfigError, match="alphas"):
        runconfig_from_dict(minimal(shadowing={"alphas": 0.01}))


def test_conjugacy_resolution_power_of_two():
    with pytest.raises(ConfigError, match="power of two"):
        runconfig_from_dict(minimal(conjugacy={"resolution": 100}))
    with pytest.raises(ConfigError, match="resolution"):
        runconfig_from_dict(minimal(conjugacy={"resolution": 2}))
    cfg = runconfig_from_dict(minimal(conjugacy={"resolution": 256}))
    assert cfg.conjugacy_resolution == 256


def test_conjugacy_needs_circle_family():
    raw = minimal("cat_map", conjugacy={"enabled": True})
    with pytest.raises(ConfigError, match="circle family"):
        runconfig_from_dict(raw)
    # explicit off on the torus is fine
    cfg = runconfig_from_dict(minimal("cat_map", conjugacy={"enabled": False}))
    assert cfg.conjugacy_enabled is False


def test_basename_must_be_bare_stem():
    for bad in ["a/b", "..", "x/../y"]:
        with pytest.raises(ConfigError, match="basename"):
            runconfig_from_dict(minimal(output={"basename": bad}))


def test_echo_round_trips_to_identical_config():
    raw = minimal("perturbed_cat",
                  max_period=4,
                  shadowing={"trials": 9, "alphas": [0.02], "max_period": 3},
                  splitting={"iterate": 2, "bins": 4, "horizon": 5},
                  output={"basename": "run1"})
    cfg = runconfig_from_dict(raw)
    echo = cfg.to_dict()
    again = runconfig_from_dict(echo)
    assert again == cfg
    assert again.to_dict() == echo


def test_echo_omits_parameter_for_fixed_families():
    echo = runconfig_from_dict(minimal()).to_dict()
    assert "s" not in echo["model"]
    echo2 = runconfig_from_dict(minimal("perturbed_doubling")).to_dict()
    assert echo2["model"]["s"] == 0.5


def test_load_config_reports_parse_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "model": {}\n  "seed": 1\n}\n')
    with pytest.raises(ConfigError, match=r"line 3 column 3"):
        load_config(path)


def test_load_config_happy_path(tmp_path):
    path = tmp_path / "ok.json"
    path.write_text(json.dumps(minimal()))
    assert load_config(path).seed == 7


def test_shipped_schema_is_valid_draft7():
    schema = config_schema()
    jsonschema.Draft7Validator.check_schema(schema)


def test_shipped_schema_agrees_with_loader():
    schema = config_schema()
    good = [
        minimal(),
        minimal("cat_map"),
        minimal("perturbed_doubling", max_period=3),
    ]
    for raw in good:
        jsonschema.validate(raw, schema)
        runconfig_from_dict(raw)
    bad = [
        {"model": {"family": "doubling"}},
        {"model": {"family": "doubling", "s": 1.0}, "seed": 1},
        {"model": {"family": "perturbed_cat"}, "seed": 1},
        minimal(max_period=0),
        minimal(bogus=3),
        minimal(pliss={"prime_exponent": 1.5}),
    ]
    for raw in bad:
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(raw, schema)
        with pytest.raises(ConfigError):
            runconfig_from_dict(raw)


def test_example_configs_load_and_validate():
    import pathlib
    schema = config_schema()
    configs = sorted(pathlib.Path(__file__).parent.parent.glob("configs/*.json"))
    assert len(configs) >= 4
    for path in configs:
        raw = json.loads(path.read_text())
        jsonschema.validate(raw, schema)
        load_config(path)
