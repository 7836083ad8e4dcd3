import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mscheme import config as cfg
from mscheme.errors import ConfigurationError


def _write(tmp_path, doc, name="c.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


@pytest.mark.parametrize("command", cfg.COMMANDS)
def test_defaults_fill_every_key(command):
    doc = {"command": command}
    if command == "fit":
        doc["parameters"] = {"input_csv": "s.csv", "model": "loss_line"}
    rc = cfg.validate(doc)
    assert set(rc.parameters) == set(cfg.SCHEMA[command])
    assert rc.output_dir == "mscheme-out" and rc.seed == 0


def test_every_unit_key_has_known_suffix():
    for schema in cfg.SCHEMA.values():
        for key in schema:
            base, unit = cfg.split_unit(key)
            assert unit is None or key == f"{base}_{unit}"
    assert cfg.split_unit("gamma_2pi_mhz") == ("gamma", "2pi_mhz")
    assert cfg.split_unit("t_stop_us") == ("t_stop", "us")
    assert cfg.split_unit("model") == ("model", None)


def test_misspelled_key_suggestion():
    with pytest.raises(ConfigurationError, match="did you mean 'gamma_2pi_mhz'"):
        cfg.validate({"command": "scan-loss", "parameters": {"gama_2pi_mhz": 2.0}})


@given(st.sampled_from(sorted(cfg.SCHEMA["scan-loss"])), st.integers(0, 30), st.sampled_from("xqz"))
def test_any_single_typo_rejected(key, pos, letter):
    pos = pos % (len(key) + 1)
    typo = key[:pos] + letter + key[pos:]
    with pytest.raises(ConfigurationError, match="unknown key|unit-suffix"):
        cfg.validate({"command": "scan-loss", "parameters": {typo: 1.0}})


def test_unit_mismatch_is_its_own_error():
    with pytest.raises(ConfigurationError, match="unit-suffix mismatch.*gamma_2pi_mhz"):
        cfg.validate({"command": "scan-loss", "parameters": {"gamma_2pi_khz": 2.0}})


@pytest.mark.parametrize(
    "doc, pattern",
    [
        ({"command": "fit", "parameters": {"model": "loss_line"}}, "missing required key 'input_csv'"),
        ({"parameters": {}}, "missing required key 'command'"),
        ({"command": "scan-los"}, "did you mean 'scan-loss'"),
        ({"command": "scan-loss", "parameters": {"model": "exact"}}, "must be one of"),
        ({"command": "scan-loss", "parameters": {"delta3_points": 2.5}}, "integer"),
        ({"command": "scan-loss", "parameters": {"wait_us": "long"}}, "number"),
        ({"command": "scan-loss", "seed": "x"}, "seed"),
        ({"command": "scan-loss", "outptu_dir": "x"}, "did you mean 'output_dir'"),
        ({"command": "dvr", "parameters": {"channel_a": {"d_e_cn": 1.0}}}, "'channel_a.d_e_cn'.*'channel_a.d_e_cm'"),
        ([1, 2], "JSON object"),
    ],
)
def test_validation_errors(doc, pattern):
    with pytest.raises(ConfigurationError, match=pattern):
        cfg.validate(doc)


def test_empty_and_invalid_files(tmp_path):
    with pytest.raises(ConfigurationError, match="empty"):
        cfg.load_config(_write(tmp_path, "  \n"))
    with pytest.raises(ConfigurationError, match="invalid JSON at line 2"):
        cfg.load_config(_write(tmp_path, '{\n"command": }'))
    with pytest.raises(ConfigurationError, match="cannot read"):
        cfg.load_config(tmp_path / "nope.json")


def test_overrides(tmp_path):
    path = _write(tmp_path, {"command": "dvr", "parameters": {"n_points": 128}})
    rc = cfg.load_config(
        path,
        ["n_points=256", "channel_a.d_e_cm=1500", "parameters.mode=\"coupled\"", "coupling.kind=gaussian", "seed=3"],
    )
    assert rc["n_points"] == 256
    assert rc["channel_a.d_e_cm"] == 1500.0
    assert rc["mode"] == "coupled" and rc["coupling.kind"] == "gaussian"
    assert rc.seed == 3
    with pytest.raises(ConfigurationError, match="key=value"):
        cfg.load_config(path, ["n_points"])
    with pytest.raises(ConfigurationError, match="did you mean 'n_points'"):
        cfg.load_config(path, ["n_pionts=3"])


def test_command_argument(tmp_path):
    path = _write(tmp_path, {"parameters": {"wait_us": 5}})
    assert cfg.load_config(path, command="scan-loss").command == "scan-loss"
    path = _write(tmp_path, {"command": "stirap"})
    with pytest.raises(ConfigurationError, match="subcommand 'scan-loss'"):
        cfg.load_config(path, command="scan-loss")


def test_hash_tracks_semantic_fields_only():
    base = cfg.validate({"command": "scan-loss"})
    same = cfg.validate({"command": "scan-loss", "output_dir": "elsewhere", "parameters": {"wait_us": 20}})
    assert base.config_hash() == same.config_hash()
    assert base == cfg.validate({"command": "scan-loss", "output_dir": "mscheme-out"})
    for doc in (
        {"command": "scan-loss", "parameters": {"wait_us": 21.0}},
        {"command": "scan-loss", "seed": 1},
        {"command": "scan-decay"},
    ):
        assert cfg.validate(doc).config_hash() != base.config_hash()


@given(st.floats(0.1, 1e3), st.floats(0.1, 1e3))
def test_hash_injective_on_wait(a, b):
    ha = cfg.validate({"command": "scan-loss", "parameters": {"wait_us": a}}).config_hash()
    hb = cfg.validate({"command": "scan-loss", "parameters": {"wait_us": b}}).config_hash()
    assert (ha == hb) == (a == b)
