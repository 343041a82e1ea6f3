"""Flat YAML experiment configs.

One experiment per file. Keys are validated against a per-experiment
schema; unknown keys are rejected. In sweep mode, list values expand into
a Cartesian product in file order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import yaml

EXPERIMENTS = ("heat1d", "heat2d", "grayscott", "brusselator", "cavity")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


# key -> (type, default); a default of None means "optional / derived"
COMMON = {
    "experiment": (str, None),
    "seed": (int, 0),
    "layers": (int, None),
    "tol": (float, 1e-8),
    "max_evals": (int, 10_000),
    "warm_start": (bool, True),
    "verify": (bool, True),
    "mode": (str, "quantum"),
    "output": (str, "results"),
    "runs": (int, 1),
    "workers": (int, 1),
    "figures": (bool, False),
}

SCHEMAS = {
    "heat1d": {
        "scheme": (str, "IE"), "n": (int, 3), "delta": (float, None), "D": (float, None),
        "n_t": (int, 20), "T": (float, 1.0), "L": (float, 1.0), "boundary": (str, "D"),
        "g_left": (float, 1.0), "g_right": (float, 0.0), "initial": (str, "zero"),
    },
    "heat2d": {
        "mx": (int, 3), "my": (int, 3), "delta_x": (float, 1.0), "delta_y": (float, 1.0),
        "n_t": (int, 20), "T": (float, 1.0),
        "g_x_left": (float, 0.0), "g_x_right": (float, 0.0),
        "g_y_left": (float, 1.0), "g_y_right": (float, 0.0), "initial": (str, "zero"),
    },
    "grayscott": {
        "n": (int, 6), "dt": (float, 0.5), "T": (float, 150.0),
        "D1": (float, 1e-4), "D2": (float, 1e-6), "k1": (float, 0.04), "k2": (float, 0.02),
    },
    "brusselator": {
        "n": (int, 4), "dt": (float, 0.5), "T": (float, 100.0),
        "D1": (float, 1e-4), "D2": (float, 1e-4), "k1": (float, 3.0), "k2": (float, 1.0),
    },
    "cavity": {
        "m": (int, 3), "Re": (float, 100.0), "dt": (float, 0.5), "T": (float, 5.0),
        "lid_velocity": (float, 1.0), "pressure_layers": (int, None),
    },
}

DEFAULT_LAYERS = {"heat1d": 3, "heat2d": 6, "grayscott": 8, "brusselator": 6, "cavity": 16}

CHOICES = {
    "scheme": ("IE", "CN"),
    "boundary": ("D", "N"),
    "mode": ("quantum", "oracle"),
    "initial": ("zero", "sine", "linear"),
}

POSITIVE = ("layers", "n", "mx", "my", "m", "n_t", "runs", "workers", "max_evals", "tol", "T", "L", "dt", "Re")
NON_NEGATIVE = ("delta", "D", "delta_x", "delta_y", "D1", "D2")


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    def replace(self, **changes) -> "ExperimentConfig":
        merged = dict(self.values)
        merged.update(changes)
        return validate(merged)


def _coerce(key, value, kind):
    if value is None:
        return None
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _schema(experiment):
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    return {**COMMON, **SCHEMAS[experiment]}


def validate(raw: dict, allow_lists: bool = False) -> ExperimentConfig:
    """Fill defaults and check every key; lists only when ``allow_lists``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of flat keys")
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    schema = _schema(raw["experiment"])
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {raw['experiment']}: {', '.join(unknown)}")
    values = {}
    # file keys first so sweeps expand in file order
    for key in list(raw) + [k for k in schema if k not in raw]:
        kind, default = schema[key]
        value = raw.get(key, default)
        if isinstance(value, list):
            if not allow_lists or key == "experiment":
                raise ConfigError(f"{key}: lists are only allowed in sweep configs")
            if not value:
                raise ConfigError(f"{key}: empty sweep list")
            values[key] = [_check(key, _coerce(key, v, kind)) for v in value]
        else:
            values[key] = _check(key, _coerce(key, value, kind))
    if values["layers"] is None:
        values["layers"] = DEFAULT_LAYERS[values["experiment"]]
    if values["experiment"] == "heat1d" and not allow_lists:
        if values["delta"] is not None and values["D"] is not None:
            raise ConfigError("give either delta or D, not both")
        if values["delta"] is None and values["D"] is None:
            values["delta"] = 1.0
    return ExperimentConfig(values)


def _check(key, value):
    if value is None:
        return None
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key}: must be one of {', '.join(CHOICES[key])}, got {value!r}")
    if key in POSITIVE and not value > 0:
        raise ConfigError(f"{key}: must be positive, got {value!r}")
    if key in NON_NEGATIVE and value < 0:
        raise ConfigError(f"{key}: must be non-negative, got {value!r}")
    return value


def load(path, allow_lists: bool = False) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"config {path} is empty")
    if isinstance(raw, dict):
        nested = [k for k, v in raw.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"config must be flat; nested keys: {', '.join(nested)}")
    return validate(raw, allow_lists=allow_lists)


def expand(config: ExperimentConfig) -> list[ExperimentConfig]:
    """Cartesian product over list-valued keys, in file order."""
    keys = [k for k, v in config.values.items() if isinstance(v, list)]
    if not keys:
        return [validate(dict(config.values))]
    points = []
    for combo in itertools.product(*(config.values[k] for k in keys)):
        values = dict(config.values)
        values.update(zip(keys, combo))
        points.append(validate(values))
    return points


def swept_keys(config: ExperimentConfig) -> list[str]:
    return [k for k, v in config.values.items() if isinstance(v, list)]
