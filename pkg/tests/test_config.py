import json

import pytest

from gktwist.core.config import Settings, resolve_tolerances, tolerance_keys
from gktwist.core.errors import ConfigError
from gktwist.models.models import SuiteName
from gktwist.schemas.config import SampleBlock, load_config, parse_config

PLANE_BOUNDS = ((-1.0, 1.0), (-1.0, 1.0))


def test_valid_config_builds_its_connection(make_config):
    config = parse_config(json.dumps(make_config({"metric": {"E": "1", "G": "sin(u)^2"}}, ((0.3, 2.8), (0.0, 1.0)), ["connection"])))
    assert config.checks == [SuiteName.CONNECTION]
    assert config.samples.grid_size == 3
    spec = config.build_connection()
    assert spec.label == "test"
    assert config.build_twistor_chart().sign == 1


def test_expression_errors_name_the_field(make_config):
    gamma = [[["u**2", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
    with pytest.raises(ConfigError, match=r"connection\.gamma\[0\]\[0\]\[0\]"):
        parse_config(json.dumps(make_config({"gamma": gamma}, PLANE_BOUNDS, ["connection"])))


def test_connection_needs_exactly_one_source(make_config):
    both = {"flat": True, "metric": {"E": "1", "G": "1"}}
    with pytest.raises(ConfigError, match="exactly one connection source"):
        parse_config(json.dumps(make_config(both, PLANE_BOUNDS, ["connection"])))
    with pytest.raises(ConfigError, match="exactly one connection source"):
        parse_config(json.dumps(make_config({}, PLANE_BOUNDS, ["connection"])))


def test_unknown_tolerance_key_is_rejected(make_config):
    text = json.dumps(make_config({"flat": True}, PLANE_BOUNDS, ["connection"], tolerances={"wobble": 1e-3}))
    with pytest.raises(ConfigError, match=r"tolerances\.wobble"):
        parse_config(text)


def test_schema_errors_are_path_qualified(make_config):
    config = make_config({"flat": True}, ((1.0, -1.0), (-1.0, 1.0)), ["connection"])
    with pytest.raises(ConfigError, match="chart"):
        parse_config(json.dumps(config))
    config = make_config({"flat": True}, PLANE_BOUNDS, ["connection"], colour="blue")
    with pytest.raises(ConfigError, match="colour"):
        parse_config(json.dumps(config))
    config = make_config({"flat": True}, PLANE_BOUNDS, ["wormholes"])
    with pytest.raises(ConfigError, match="checks"):
        parse_config(json.dumps(config))


def test_bad_twistor_sign(make_config):
    config = make_config({"flat": True}, PLANE_BOUNDS, ["theorem"], twistor={"sign": 0})
    with pytest.raises(ConfigError, match="twistor.sign"):
        parse_config(json.dumps(config))


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{")
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(str(tmp_path / "missing.json"))


def test_tolerance_layers_apply_in_order():
    resolved = resolve_tolerances({"algebraic": 1e-6}, {"algebraic": 1e-5, "flatness": 1e-3})
    assert resolved["algebraic"] == 1e-5
    assert resolved["flatness"] == 1e-3
    assert set(resolved) == set(tolerance_keys())
    with pytest.raises(ConfigError, match="must be positive"):
        resolve_tolerances({"algebraic": 0.0})


def test_settings_hold_only_tolerances_samples_and_run_switches():
    knobs = {name for name in Settings.model_fields if not name.startswith("tol_")}
    assert knobs == set(SampleBlock.model_fields) | {"fd_step", "log_level", "record_timing"}
