"""Strict run configuration: one JSON document with nested blocks.

The file carries a ``schema_version`` field and only the keys listed in
``DEFAULTS``; unknown keys are errors (typos in physics parameters must
not pass silently).  Variant blocks (target states and Bell filters) are
replaced wholesale rather than merged, and validated by their builders.
A run is fully determined by (config contents, command-line flags).
"""

from __future__ import annotations

import copy
import json
import math

import numpy as np

from .bell import BellOutcome, bell_projector
from .experiment import AnalyzerModel, GeometryConfig, PolarizedTarget
from .scattering import ScatterFrame, load_amplitude_table, ninety_degree_operator, scattering_operator
from .teleport import UnknownState

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 20260801,
    "teleport": {
        "trials": 10000,
        "state": {"mode": "random"},
        "filter": {"type": "none"},
    },
    "bellscan": {
        "state": "psi_plus",
        "grid_points": 19,
        "mc_samples": 100000,
        "tilt_plane": "xz",
    },
    "experiment": {
        "events": 100000,
        "summary_channel": "psi_minus",
        "geometry": {
            "lh2_m": [0.0, 0.0, 0.0],
            "ph2_m": [-5.0, 0.0, 0.0],
            "analyzer_m": [5.0, 0.0, 0.0],
            "f1_m": [-6.0, 0.0, 0.0],
            "f2_m": [6.0, 0.0, 0.0],
            "beam_energy_mev": 40.0,
            "coincidence_window_s": 5e-8,
            "beam_period_s": 1e-6,
            "detector_efficiency": 1.0,
            "timestamp_jitter_s": 0.0,
        },
        "target": {"mode": "bloch", "direction": [0.0, 1.0, 0.0]},
        "analyzer": {"analyzing_power": 0.5},
        "filter": {"type": "bell_projector", "outcome": "psi_minus"},
    },
}

# blocks whose content depends on a mode/type discriminator: replaced, not merged
_REPLACE_PATHS = {
    "teleport.state",
    "teleport.filter",
    "experiment.target",
    "experiment.filter",
}


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


def _merge(defaults: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(defaults[key], dict) and here not in _REPLACE_PATHS:
            if not isinstance(value, dict):
                raise ConfigError(f"config key {here!r} must be an object")
            out[key] = _merge(defaults[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None) -> dict:
    """Read, validate and merge a config file over the documented defaults."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "schema_version" not in data:
        raise ConfigError(f"{path}: missing required key 'schema_version'")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {data['schema_version']!r} "
                          f"(this build reads version {SCHEMA_VERSION})")
    return _merge(DEFAULTS, data)


# ---------------------------------------------------------------------------
# field coercion helpers

def _as_float(block: dict, key: str, path: str) -> float:
    try:
        val = float(block[key])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{path}.{key} must be a number") from None
    if not math.isfinite(val):
        raise ConfigError(f"{path}.{key} must be finite")
    return val


def _as_int(block: dict, key: str, path: str) -> int:
    val = block.get(key)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key} must be an integer")
    return val


def _as_vec3(block: dict, key: str, path: str) -> np.ndarray:
    val = block.get(key)
    if not isinstance(val, list) or len(val) != 3:
        raise ConfigError(f"{path}.{key} must be a list of three numbers")
    try:
        return np.array([float(x) for x in val])
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key} must be a list of three numbers") from None


def _as_complex(block: dict, key: str, path: str) -> complex:
    val = block.get(key)
    if not isinstance(val, list) or len(val) != 2:
        raise ConfigError(f"{path}.{key} must be a [re, im] pair")
    try:
        return complex(float(val[0]), float(val[1]))
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key} must be a [re, im] pair") from None


def _outcome(label, path: str) -> BellOutcome:
    try:
        return BellOutcome[str(label).upper()]
    except KeyError:
        names = ", ".join(o.label for o in BellOutcome)
        raise ConfigError(f"{path}: unknown Bell outcome {label!r} (expected one of {names})") from None


def _check_keys(block: dict, allowed: set[str], path: str) -> None:
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unknown config key {path + '.' + sorted(extra)[0]!r}")


def validate_seed(seed) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


# ---------------------------------------------------------------------------
# block builders

def build_unknown_state(block: dict, path: str, rng: np.random.Generator) -> UnknownState:
    mode = block.get("mode")
    if mode == "random":
        _check_keys(block, {"mode"}, path)
        return UnknownState.random(rng)
    if mode == "bloch":
        _check_keys(block, {"mode", "direction"}, path)
        try:
            return UnknownState.from_bloch(_as_vec3(block, "direction", path))
        except ValueError as exc:
            raise ConfigError(f"{path}.direction: {exc}") from None
    if mode == "amplitudes":
        _check_keys(block, {"mode", "a", "b"}, path)
        try:
            return UnknownState(_as_complex(block, "a", path), _as_complex(block, "b", path))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.mode must be 'random', 'bloch' or 'amplitudes'")


def build_filter(block: dict, path: str):
    """Build the optional 4x4 Bell filter named by a config block."""
    ftype = block.get("type")
    if ftype == "none":
        _check_keys(block, {"type"}, path)
        return None
    if ftype == "bell_projector":
        _check_keys(block, {"type", "outcome"}, path)
        return bell_projector(_outcome(block.get("outcome"), f"{path}.outcome"))
    if ftype == "ninety_deg":
        _check_keys(block, {"type", "a", "e"}, path)
        return ninety_degree_operator(_as_complex(block, "a", path), _as_complex(block, "e", path))
    if ftype == "amplitude_table":
        _check_keys(block, {"type", "path", "theta_rad", "identical_nucleons"}, path)
        identical = block.get("identical_nucleons", False)
        if not isinstance(identical, bool):
            raise ConfigError(f"{path}.identical_nucleons must be a boolean")
        try:
            table = load_amplitude_table(block.get("path"), identical_nucleons=identical)
            amps = table.at(_as_float(block, "theta_rad", path))
            return scattering_operator(amps, ScatterFrame.canonical())
        except (OSError, TypeError) as exc:
            raise ConfigError(f"{path}.path: cannot read amplitude table ({exc})") from None
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.type must be 'none', 'bell_projector', 'ninety_deg' "
                      f"or 'amplitude_table'")


def build_geometry(block: dict, path: str = "experiment.geometry") -> GeometryConfig:
    try:
        return GeometryConfig(
            lh2=_as_vec3(block, "lh2_m", path),
            ph2=_as_vec3(block, "ph2_m", path),
            analyzer=_as_vec3(block, "analyzer_m", path),
            f1=_as_vec3(block, "f1_m", path),
            f2=_as_vec3(block, "f2_m", path),
            beam_energy_mev=_as_float(block, "beam_energy_mev", path),
            coincidence_window_s=_as_float(block, "coincidence_window_s", path),
            beam_period_s=_as_float(block, "beam_period_s", path),
            detector_efficiency=_as_float(block, "detector_efficiency", path),
            timestamp_jitter_s=_as_float(block, "timestamp_jitter_s", path),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_target(block: dict, path: str = "experiment.target") -> PolarizedTarget:
    rng = np.random.default_rng(0)  # target construction must be deterministic
    if block.get("mode") == "random":
        raise ConfigError(f"{path}.mode 'random' is not allowed for the polarized target")
    return PolarizedTarget(state=build_unknown_state(block, path, rng))


def build_analyzer(block: dict, path: str = "experiment.analyzer") -> AnalyzerModel:
    _check_keys(block, {"analyzing_power"}, path)
    try:
        return AnalyzerModel(analyzing_power=_as_float(block, "analyzing_power", path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
