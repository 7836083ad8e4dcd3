"""Run configuration: JSON schema with unit-suffixed keys, defaults and overrides."""
from __future__ import annotations

import copy
import difflib
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

COMMANDS = ("scan-loss", "scan-decay", "scan-dark", "stirap", "roundtrip", "fit", "dvr", "validate-table")

REQUIRED = object()

#: recognised unit suffixes, longest first so that "2pi_mhz" wins over "mhz"
UNIT_SUFFIXES = (
    "mw_per_cm2", "per_angstrom", "per_us", "2pi_mhz", "2pi_khz", "angstrom", "amu", "cm", "us",
)

_STIRAP = {
    "omega1_2pi_mhz": 3.0,
    "omega2_2pi_mhz": 6.0,
    "pulse_width_us": 10.0,
    "pulse_delay_us": 7.0,
    "delta1_2pi_mhz": 0.0,
    "delta2_2pi_mhz": 0.0,
    "gamma_2pi_mhz": 2.0,
    "linewidth1_2pi_khz": 0.0,
    "linewidth2_2pi_khz": 0.0,
    "tol": 1e-8,
}

_MORSE_A = {"kind": "morse", "d_e_cm": 1000.0, "a_per_angstrom": 0.9, "r_e_angstrom": 4.5, "t_e_cm": 0.0,
            "path": None, "asymptote_cm": None}
_MORSE_B = dict(_MORSE_A, t_e_cm=100.0, r_e_angstrom=4.7)

SCHEMA = {
    "scan-loss": {
        "delta3_start_2pi_mhz": -8.0,
        "delta3_stop_2pi_mhz": 8.0,
        "delta3_points": 81,
        "intensity_mw_per_cm2": 270.0,
        "wait_us": 20.0,
        "gamma_2pi_mhz": 2.0,
        "omega_norm_2pi_khz": 6.0,
        "linewidth_2pi_khz": 0.0,
        "model": "master",
        "tol": 1e-8,
    },
    "scan-decay": {
        "intensity_mw_per_cm2": 270.0,
        "t_stop_us": 50.0,
        "t_points": 26,
        "gamma_2pi_mhz": 2.0,
        "omega_norm_2pi_khz": 6.0,
        "detuning_2pi_mhz": 0.0,
        "linewidth_2pi_khz": 0.0,
        "model": "master",
        "tol": 1e-8,
    },
    "scan-dark": {
        "delta3_start_2pi_mhz": -4.0,
        "delta3_stop_2pi_mhz": 4.0,
        "delta3_points": 41,
        "fine_halfwidth_2pi_mhz": 0.15,
        "fine_points": 31,
        "delta4_2pi_mhz": 0.0,
        "omega3_norm_2pi_khz": 6.0,
        "omega4_norm_2pi_khz": 4.0,
        "intensity3_mw_per_cm2": 500.0,
        "intensity4_mw_per_cm2": 5000.0,
        "gamma_2pi_mhz": 2.0,
        "linewidth_2pi_khz": 1.0,
        "wait_us": 100.0,
        "tol": 1e-8,
    },
    "stirap": dict(_STIRAP, samples=201),
    "roundtrip": dict(_STIRAP, linewidth1_2pi_khz=1.0, linewidth2_2pi_khz=1.0, hold_us=0.0,
                      hold_loss_per_us=0.0),
    "fit": {
        "input_csv": REQUIRED,
        "model": REQUIRED,
        "offset": False,
        "wait_us": None,
        "intensity_mw_per_cm2": None,
        "line_model": "rate",
        "intensity3_mw_per_cm2": None,
        "intensity4_mw_per_cm2": None,
        "gamma_2pi_mhz": None,
        "linewidth_2pi_khz": None,
        "delta4_2pi_mhz": None,
        "omega3_guess_2pi_khz": 6.0,
        "omega4_guess_2pi_khz": 5.0,
        "start_scales": [1.0],
        "tol": 1e-10,
    },
    "dvr": {
        "mode": "single",
        "r_min_angstrom": 3.0,
        "r_max_angstrom": 15.0,
        "n_points": 512,
        "reduced_mass_amu": 66.4527,
        "j_total": 0,
        "max_levels": 10,
        "channel_a": _MORSE_A,
        "channel_b": _MORSE_B,
        "coupling": {"kind": "constant", "w_cm": 0.0, "r_c_angstrom": 5.0, "sigma_angstrom": 0.5},
        "wavefunctions": False,
    },
    "validate-table": {
        "table_csv": None,
    },
}

CHOICES = {
    ("scan-loss", "model"): ("master", "rate"),
    ("scan-decay", "model"): ("master", "rate"),
    ("fit", "model"): ("exponential_decay", "loss_line", "dark_resonance"),
    ("fit", "line_model"): ("rate", "master"),
    ("dvr", "mode"): ("single", "coupled"),
    ("dvr", "channel_a.kind"): ("morse", "csv"),
    ("dvr", "channel_b.kind"): ("morse", "csv"),
    ("dvr", "coupling.kind"): ("constant", "gaussian"),
}

TOP_LEVEL = ("command", "parameters", "output_dir", "seed")


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    output_dir: str = "mscheme-out"
    seed: int = 0
    source: str = field(default="", compare=False)

    def semantic(self):
        """The fields that determine the outputs; ``output_dir`` is excluded."""
        return {"command": self.command, "parameters": self.parameters, "seed": self.seed}

    def config_hash(self):
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __getitem__(self, key):
        node = self.parameters
        for part in key.split("."):
            node = node[part]
        return node


def split_unit(key):
    for suffix in UNIT_SUFFIXES:
        if key.endswith("_" + suffix):
            return key[: -len(suffix) - 1], suffix
    return key, None


def _reject_unknown(key, schema, where):
    base, unit = split_unit(key)
    for known in schema:
        kbase, kunit = split_unit(known)
        if unit is not None and kunit is not None and kbase == base and kunit != unit:
            raise ConfigurationError(
                f"unit-suffix mismatch for {where + key!r}: expected {where + known!r} (units {kunit})"
            )
    close = difflib.get_close_matches(key, list(schema), n=1, cutoff=0.6)
    hint = f"; did you mean {where + close[0]!r}?" if close else ""
    raise ConfigurationError(f"unknown key {where + key!r}{hint}")


def _check_type(value, default, where):
    if default is None or default is REQUIRED:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigurationError(f"{where} must be an integer")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigurationError(f"{where} must be a list")
        return value
    return value


def _merge(schema, given, command, prefix=""):
    if not isinstance(given, dict):
        raise ConfigurationError(f"{prefix or 'parameters'} must be an object")
    for key in given:
        if key not in schema:
            _reject_unknown(key, schema, prefix)
    out = {}
    for key, default in schema.items():
        where = prefix + key
        if isinstance(default, dict):
            out[key] = _merge(default, given.get(key, {}), command, where + ".")
            continue
        if key in given:
            value = _check_type(given[key], default, where)
        elif default is REQUIRED:
            raise ConfigurationError(f"missing required key {where!r} for {command}")
        else:
            value = copy.deepcopy(default)
        choices = CHOICES.get((command, where))
        if choices and value not in choices:
            raise ConfigurationError(f"{where} must be one of {choices}, got {value!r}")
        out[key] = value
    return out


def validate(document, source=""):
    """Turn a parsed JSON document into a RunConfig with defaults applied."""
    if not isinstance(document, dict):
        raise ConfigurationError("configuration must be a JSON object")
    for key in document:
        if key not in TOP_LEVEL:
            _reject_unknown(key, dict.fromkeys(TOP_LEVEL), "")
    if "command" not in document:
        raise ConfigurationError("missing required key 'command'")
    command = document["command"]
    if command not in COMMANDS:
        close = difflib.get_close_matches(str(command), COMMANDS, n=1)
        hint = f"; did you mean {close[0]!r}?" if close else ""
        raise ConfigurationError(f"unknown command {command!r}{hint}")
    params = _merge(SCHEMA[command], document.get("parameters", {}) or {}, command)
    seed = document.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigurationError("seed must be an integer")
    out_dir = document.get("output_dir", "mscheme-out")
    if not isinstance(out_dir, str):
        raise ConfigurationError("output_dir must be a string")
    return RunConfig(command, params, out_dir, seed, source)


def read_document(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    if not text.strip():
        raise ConfigurationError(f"{path}: empty configuration file")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def load_config(path, overrides=(), command=None):
    """Read, override and validate a JSON config file.

    ``overrides`` are ``key=value`` strings; keys are dotted paths inside
    ``parameters`` (or one of the top-level keys) and values are parsed as
    JSON when possible, else taken as strings. ``command`` fills in or must
    agree with the file's command.
    """
    doc = read_document(path)
    if not isinstance(doc, dict):
        raise ConfigurationError("configuration must be a JSON object")
    if command is not None:
        if doc.setdefault("command", command) != command:
            raise ConfigurationError(
                f"config is for {doc['command']!r} but subcommand {command!r} was requested"
            )
    apply_overrides(doc, overrides)
    return validate(doc, str(path))


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        value = _parse_value(raw)
        if key in TOP_LEVEL:
            doc[key] = value
            continue
        parts = key.split(".")
        if parts[0] == "parameters":
            parts = parts[1:]
        node = doc.setdefault("parameters", {})
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return doc
