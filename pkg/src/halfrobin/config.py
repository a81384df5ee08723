"""Experiment configuration: JSON schema, defaults and parsing."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import jsonschema

SCENARIOS = ("S1", "S2", "S3", "S4", "S5", "S6", "S7")


class ConfigError(ValueError):
    """Malformed experiment configuration; ``problems`` lists every violation."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


_number = {"type": "number"}
_coef = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["constant", "gaussian", "box", "powertail"]},
        "a": {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]},
        "c": _number,
        "center": {"oneOf": [_number, {"type": "array", "items": _number}, {"type": "null"}]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "halfwidth": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}
_grid = {
    "type": "object",
    "required": ["n", "N", "L"],
    "properties": {
        "n": {"enum": [1, 2, 3]},
        "N": {"type": "integer", "minimum": 4},
        "L": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}
_strip = {
    "type": "object",
    "required": ["Nx", "Nt", "L", "T"],
    "properties": {
        "Nx": {"type": "integer", "minimum": 8},
        "Nt": {"type": "integer", "minimum": 8},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}
_lam = {"oneOf": [{"type": "number", "exclusiveMaximum": 0},
                  {"type": "array", "items": {"type": "number", "exclusiveMaximum": 0}, "minItems": 1}]}

SCHEMA = {
    "type": "object",
    "required": ["scenario"],
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "grid": _grid,
        "strip": _strip,
        "lam": _lam,
        "alpha1": _coef,
        "alpha2": _coef,
        "fit_window": {"oneOf": [{"type": "null"},
                                 {"type": "array", "items": {"type": "integer", "minimum": 1},
                                  "minItems": 2, "maxItems": 2}]},
        "tolerances": {"type": "object", "additionalProperties": _number},
        "params": {"type": "object"},
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

REQUIRED = {
    "S1": ["lam", "grid"],
    "S2": ["lam", "strip", "alpha2"],
    "S3": ["lam", "grid", "alpha2"],
    "S4": ["lam", "grid", "alpha2"],
    "S5": ["lam", "grid", "alpha2"],
    "S6": ["grid", "alpha1", "alpha2"],
    "S7": ["lam", "grid", "alpha2"],
}

_ZERO = {"family": "constant", "a": 0.0}

# defaults sized for a few minutes per scenario on one core
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "S1": {
        "lam": [-1.0, -4.0, -25.0],
        "grid": {"n": 1, "N": 256, "L": 50.0},
        "tolerances": {"norm_abs": 1e-12, "green_abs": 1e-10},
        "params": {"extra_grids": [{"n": 2, "N": 64, "L": 20.0}], "dense_check_max": 1024,
                   "green_pairs": 20},
    },
    "S2": {
        "lam": -5.0,
        "strip": {"Nx": 64, "Nt": 64, "L": 16.0, "T": 4.0},
        "alpha1": _ZERO,
        "alpha2": {"family": "gaussian", "a": 1.0, "sigma": 1.0},
        "tolerances": {"max_rel_error": 0.05, "min_ratio": 1.8},
        "params": {"levels": 2, "source": {"x0": None, "t0": 1.0, "width": 1.0}},
    },
    "S3": {
        "lam": -10.0,
        "grid": {"n": 1, "N": 2048, "L": 100.0},
        "alpha1": _ZERO,
        "alpha2": {"family": "gaussian", "a": 1.0, "sigma": 5.0},
        "fit_window": [64, 512],
        "tolerances": {"exponent_band": 0.45, "class_slack": 0.45, "crosscheck_rel": 0.10},
        "params": {
            "crosscheck": {
                "strip": {"Nx": 48, "Nt": 64, "L": 24.0, "T": 4.0},
                "lam": -5.0,
                "alpha2": {"family": "gaussian", "a": 1.0, "sigma": 6.0},
                "k": 10,
                "reference_N": 512,
            },
        },
    },
    "S4": {
        "lam": -10.0,
        "grid": {"n": 1, "N": 512, "L": 50.0},
        "alpha1": _ZERO,
        "alpha2": {"family": "gaussian", "a": 1.0, "sigma": 2.0},
        "tolerances": {"trace_change": 0.02, "sp_change": 0.02, "cwikel_band": 0.25},
        "params": {
            "lp_alpha": {"family": "powertail", "a": 1.0, "s": 2.0},
            "p_values": [1.0, 2.0],
            "cwikel": {"grid": {"n": 1, "N": 1024, "L": 100.0},
                       "alpha": {"family": "gaussian", "a": 1.0, "sigma": 5.0}},
        },
    },
    "S5": {
        "lam": -4.0,
        "grid": {"n": 1, "N": 256, "L": 40.0},
        "alpha1": _ZERO,
        "alpha2": {"family": "constant", "a": 1.0},
        "tolerances": {"ratio_low": 1.8, "ratio_high": 2.2, "compact_ratio_max": 1.2,
                       "bound_state_rel": 0.02},
        "params": {"eps": 0.01, "compact_alpha": {"family": "box", "a": 1.0, "halfwidth": 2.0},
                   "bound_state": {"c": 2.0, "Nt": 512, "T": 40.0}},
    },
    "S6": {
        "grid": {"n": 1, "N": 256, "L": 20.0},
        "alpha1": {"family": "box", "a": 2.0, "halfwidth": 1.0},
        "alpha2": {"family": "box", "a": [2.0, 1.0], "halfwidth": 1.0},
        "tolerances": {"imag_abs": 1e-6, "fd_rel": 0.05, "residual": 1e-8},
        "params": {
            "real_region": [-4.5, -0.1, -0.1, 0.1], "real_scan": [24, 3],
            "complex_region": [-6.0, -0.1, -4.0, 4.0], "complex_scan": [24, 16],
            "refine": 1e-10,
            "fd_strip": {"Nx": 256, "Nt": 128, "L": 20.0, "T": 6.0},
            "hansmann_p": 1.0,
        },
    },
    "S7": {
        "lam": -4.0,
        "grid": {"n": 1, "N": 256, "L": 40.0},
        "alpha1": _ZERO,
        "alpha2": {"family": "powertail", "a": 1.0, "s": 0.5},
        "tolerances": {"ratio_max": 1.5},
        "params": {"eps": 0.02, "level": 0.5, "p_values": [1.0, 2.0]},
    },
}


@dataclass
class ExperimentConfig:
    scenario: str
    grid: Optional[dict] = None
    strip: Optional[dict] = None
    lam: Any = None
    alpha1: Optional[dict] = None
    alpha2: Optional[dict] = None
    fit_window: Optional[list] = None
    tolerances: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    out: str = "runs"
    seed: int = 0

    def to_dict(self) -> dict:
        d = {k: copy.deepcopy(v) for k, v in self.__dict__.items() if v is not None}
        return d

    def lam_list(self) -> List[float]:
        return [float(x) for x in (self.lam if isinstance(self.lam, list) else [self.lam])]


def config_from_dict(raw: dict, fill_defaults: bool = True) -> ExperimentConfig:
    """Validate ``raw`` and build a config; missing optional parts come from DEFAULTS."""
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a JSON object"])
    validator = jsonschema.Draft7Validator(SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(e.path)):
        where = "/".join(str(p) for p in err.path) or "<root>"
        problems.append(f"{where}: {err.message}")
    scenario = raw.get("scenario")
    if scenario in REQUIRED:
        for key in REQUIRED[scenario]:
            if key not in raw:
                problems.append(f"{key}: required field {key!r} missing for scenario {scenario}")
    if problems:
        raise ConfigError(problems)
    merged = copy.deepcopy(DEFAULTS[scenario]) if fill_defaults else {}
    for key, val in raw.items():
        if key in ("tolerances", "params") and key in merged:
            merged[key] = {**merged[key], **copy.deepcopy(val)}
        else:
            merged[key] = copy.deepcopy(val)
    return ExperimentConfig(**merged)


def default_config(scenario: str) -> ExperimentConfig:
    if scenario not in SCENARIOS:
        raise ConfigError([f"scenario: unknown scenario {scenario!r}"])
    return config_from_dict({"scenario": scenario, **copy.deepcopy(DEFAULTS[scenario])})


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: not valid JSON ({exc})"]) from None
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path} ({exc.strerror})"]) from None
    return config_from_dict(raw)
