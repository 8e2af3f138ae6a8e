"""Experiment configuration files (JSON), validated against a fixed schema.

All physical quantities are in units of the detuning (delta = 1) and times in
units of 1/delta. Complex entries are written as strings such as ``"1.4i"``,
``"-1.2"`` or ``"0.3-1.2i"``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

MODES = (
    "single_evolve",
    "two_evolve",
    "wigner",
    "catfit",
    "project",
    "chsh",
    "sweep_g",
    "sweep_gamma",
    "stability",
)
SINGLE_MODES = {"single_evolve", "catfit"}
STATES = ("evolved", "cat", "coherent", "mixture", "separable_cat", "entangled_cat")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_COMPLEX = re.compile(
    r"""^\s*
    (?:(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?![\d.eEij]))?
    \s*
    (?:(?P<im>[+-]?\s*(?:\d+\.?\d*|\.\d+)?(?:[eE][+-]?\d+)?)[ij])?
    \s*$""",
    re.VERBOSE,
)


def parse_complex(text) -> complex:
    """Strict parser for ``"a+bi"`` style numbers; plain numbers pass through."""
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if not isinstance(text, str) or not text.strip():
        raise ValueError(f"not a complex number: {text!r}")
    m = _COMPLEX.match(text)
    if not m or (m.group("re") is None and m.group("im") is None):
        raise ValueError(f"not a complex number: {text!r}")
    re_part = float(m.group("re")) if m.group("re") else 0.0
    im_txt = m.group("im")
    im_part = 0.0
    if im_txt is not None:
        im_txt = im_txt.replace(" ", "")
        if im_txt in ("", "+"):
            im_part = 1.0
        elif im_txt == "-":
            im_part = -1.0
        else:
            im_part = float(im_txt)
    return complex(re_part, im_part)


def format_complex(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    if z.real == 0:
        return f"{z.imag!r}i"
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


# field -> (kind, default); kind in {"real", "complex", "int", "str", "grid", "reals", "strs"}
PARAM_FIELDS = {
    "delta": ("real", 1.0),
    "S": ("complex", None),
    "K": ("real", 1.2),
    "g": ("real", 0.0),
    "gamma_c": ("real", 0.0),
    "gamma_s": ("real", 0.0),
    "alpha_target": ("complex", 1.4j),
}
NUMERIC_FIELDS = {
    "N": ("int", 15),
    "dt": ("real", 5e-4),
    "t_final": ("real", 20.0),
    "save_every": ("int", 200),
    "wigner_grid": ("grid", [-6.0, 6.0, 201]),
    "momentum_grid": ("grid", [-12.0, 12.0, 2401]),
    "modular_offset": ("real", 0.0),
    "index_window": ("ints", [-8, 7]),
    "search_radius": ("real", 3.0),
    "sweep_values": ("reals", None),
    "threshold_tolerance": ("real", None),
    "wigner_times": ("reals", None),
    "state": ("str", "evolved"),
    "system": ("str", None),
    "bell_variant": ("str", "PsiPlus"),
    "workers": ("int", 1),
}
OUTPUT_FIELDS = {
    "directory": ("str", "results"),
    "formats": ("strs", ["csv", "json"]),
}
TOP_FIELDS = {"mode", "params", "numerics", "output"}
NONNEGATIVE = {"gamma_c", "gamma_s", "K", "dt", "t_final", "search_radius"}


@dataclass
class ExperimentConfig:
    mode: str
    params: dict[str, Any] = field(default_factory=dict)
    numerics: dict[str, Any] = field(default_factory=dict)
    output: dict[str, Any] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.numerics["N"]

    def to_dict(self) -> dict:
        def enc(kind, v):
            if v is None:
                return None
            return format_complex(v) if kind == "complex" else v

        return {
            "mode": self.mode,
            "params": {k: enc(PARAM_FIELDS[k][0], v) for k, v in self.params.items()},
            "numerics": dict(self.numerics),
            "output": dict(self.output),
        }


def _coerce(section: str, key: str, kind: str, value):
    where = f"{section}.{key}"

    def bad(expected):
        return ConfigError(f"{where}: expected {expected}, got {value!r}")

    if value is None:
        return None
    if kind == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad("a real number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad("an integer")
        return value
    if kind == "complex":
        try:
            return parse_complex(value)
        except ValueError:
            raise bad('a complex number such as "1.4i"') from None
    if kind == "str":
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if kind == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise bad("a list of strings")
        return list(value)
    if kind == "reals":
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise bad("a list of real numbers")
        return [float(v) for v in value]
    if kind == "ints":
        if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
            raise bad("a pair of integers")
        return list(value)
    if kind == "grid":
        if not (
            isinstance(value, list)
            and len(value) == 3
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
            and isinstance(value[2], int)
        ):
            raise bad("[minimum, maximum, count]")
        lo, hi, n = float(value[0]), float(value[1]), value[2]
        if n < 2 or hi <= lo:
            raise bad("a grid with maximum > minimum and count >= 2")
        return [lo, hi, n]
    raise AssertionError(kind)


def _section(raw: dict, name: str, schema: dict) -> dict:
    data = raw.get(name, {})
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object, got {data!r}")
    for key in data:
        if key not in schema:
            raise ConfigError(f"{name}: unknown key {key!r}")
    return {k: _coerce(name, k, kind, data.get(k, default)) for k, (kind, default) in schema.items()}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    for key in raw:
        if key not in TOP_FIELDS:
            raise ConfigError(f"unknown top-level key {key!r}")
    mode = raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {list(MODES)}, got {mode!r}")
    params = _section(raw, "params", PARAM_FIELDS)
    numerics = _section(raw, "numerics", NUMERIC_FIELDS)
    output = _section(raw, "output", OUTPUT_FIELDS)

    if params["S"] is None and mode != "project" and mode != "chsh":
        raise ConfigError("params.S: required for mode " + repr(mode))
    if numerics["N"] < 2:
        raise ConfigError(f"numerics.N: expected an integer >= 2, got {numerics['N']}")
    for key in NONNEGATIVE:
        section = params if key in params else numerics
        v = section[key]
        if v is not None and v < 0:
            raise ConfigError(f"{key}: expected a non-negative value, got {v}")
    if numerics["dt"] <= 0:
        raise ConfigError(f"numerics.dt: expected a positive value, got {numerics['dt']}")
    if numerics["save_every"] < 1 or numerics["workers"] < 1:
        raise ConfigError("numerics.save_every and numerics.workers must be >= 1")
    if numerics["state"] not in STATES:
        raise ConfigError(f"numerics.state: expected one of {list(STATES)}, got {numerics['state']!r}")
    if numerics["bell_variant"] not in ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"):
        raise ConfigError(f"numerics.bell_variant: unknown variant {numerics['bell_variant']!r}")
    if mode in ("sweep_g", "sweep_gamma"):
        vals = numerics["sweep_values"]
        if not vals:
            raise ConfigError("numerics.sweep_values: required for sweep modes")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"numerics.sweep_values: expected strictly increasing values, got {vals}")
    if numerics["system"] is None:
        numerics["system"] = "single" if mode in SINGLE_MODES or mode == "wigner" else "two"
    if numerics["system"] not in ("single", "two"):
        raise ConfigError(f"numerics.system: expected 'single' or 'two', got {numerics['system']!r}")
    if mode in SINGLE_MODES and numerics["system"] != "single":
        raise ConfigError(f"numerics.system: mode {mode!r} runs the single-mode model")
    if numerics["system"] == "two" and mode != "stability" and params["S"] is not None and params["S"].imag != 0:
        raise ConfigError(f"params.S: two-mode pump must be real, got {format_complex(params['S'])!r}")
    bad_fmt = [f for f in output["formats"] if f not in ("csv", "json")]
    if bad_fmt:
        raise ConfigError(f"output.formats: unknown format(s) {bad_fmt}")
    return ExperimentConfig(mode, params, numerics, output)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(raw)


def write_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
