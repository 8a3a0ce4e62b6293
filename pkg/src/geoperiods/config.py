"""Experiment configuration: schema validation, canonical hashing, loading.

Configs are JSON objects with a pinned ``schema_version``.  Unknown fields
are rejected everywhere so that a config fully determines an experiment,
and the 64-bit hash of the canonicalized JSON (sorted keys, tight
separators) names the result cache entry.
"""

from __future__ import annotations

import hashlib
import json

import jsonschema

from .errors import ConfigError

SCHEMA_VERSION = 1

SUBCOMMANDS = (
    "limiting-curvature",
    "admissibility",
    "periods-scan",
    "phase-check",
    "decay-scan",
)

_SURFACE = {
    "type": "object",
    "properties": {
        "type": {"enum": ["flat_torus", "hyperbolic", "conformal", "sphere"]},
        "L1": {"type": "number", "exclusiveMinimum": 0},
        "L2": {"type": "number", "exclusiveMinimum": 0},
        "a": {"type": "number", "exclusiveMinimum": 0},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "field": {"enum": ["half_plane", "poincare_disk"]},
        "rect": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 4,
            "maxItems": 4,
        },
        "params": {
            "type": "object",
            "properties": {"a": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
    },
    "required": ["type"],
    "additionalProperties": False,
}

_CURVE = {
    "type": "object",
    "properties": {
        "type": {
            "enum": ["geodesic_circle", "perturbed_circle", "torus_geodesic", "csv"]
        },
        "center": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "orientation": {"enum": [1, -1]},
        "amp": {"type": "number"},
        "mode": {"type": "integer"},
        "start": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "winding": {
            "type": "array",
            "items": {"type": "integer"},
            "minItems": 2,
            "maxItems": 2,
        },
        "path": {"type": "string"},
        "n_cache": {"type": "integer", "minimum": 16},
    },
    "required": ["type"],
    "additionalProperties": False,
}

_EIGENFUNCTION = {
    "type": "object",
    "properties": {
        "family": {
            "enum": [
                "torus_wave",
                "sphere_zonal",
                "sphere_highest_weight",
                "hyperbolic_wave_sum",
            ]
        },
        "direction": {
            "type": "array",
            "items": {"type": "integer"},
            "minItems": 2,
            "maxItems": 2,
        },
        "seed": {"type": "integer", "minimum": 0},
        "n_terms": {"type": "integer", "minimum": 1, "maximum": 64},
    },
    "required": ["family"],
    "additionalProperties": False,
}

_TRANSFORM = {
    "type": "object",
    "properties": {
        "type": {"enum": ["torus_translation", "mobius", "axis_translation"]},
        "m": {"type": "integer"},
        "n": {"type": "integer"},
        "matrix": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
            "minItems": 2,
            "maxItems": 2,
        },
        "T": {"type": "number"},
    },
    "required": ["type"],
    "additionalProperties": False,
}

_PHASE = {
    "type": "object",
    "properties": {
        "eps": {"type": "number", "minimum": -0.999, "maximum": 0.999},
        "grid": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 2,
            "maxItems": 2,
        },
        "interval": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "eps0": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "n_grid": {"type": "integer", "minimum": 2},
    },
    "required": ["eps"],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "surface": _SURFACE,
        "curve": _CURVE,
        "eigenfunction": _EIGENFUNCTION,
        "transform": _TRANSFORM,
        "phase": _PHASE,
        "lambdas": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0},
            "minItems": 1,
        },
        "eps_grid": {
            "type": "array",
            "items": {"type": "number", "minimum": -1, "maximum": 1},
            "minItems": 1,
        },
        "nu_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "quadrature": {
            "type": "object",
            "properties": {"n_samples": {"type": "integer", "minimum": 16}},
            "additionalProperties": False,
        },
        "n_t": {"type": "integer", "minimum": 2},
        "n_eps": {"type": "integer", "minimum": 3},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
    },
    "required": ["schema_version", "subcommand", "surface", "curve"],
    "additionalProperties": False,
}

_REQUIRED_BY_SUBCOMMAND = {
    "limiting-curvature": (),
    "admissibility": (),
    "periods-scan": ("eigenfunction", "lambdas"),
    "phase-check": ("transform", "phase"),
    "decay-scan": ("eigenfunction", "lambdas", "eps_grid"),
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(part) for part in path)


def validate_config(cfg) -> dict:
    """Validate a config object; raise ConfigError with a JSON pointer."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", pointer="/")
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, pointer=_pointer(err.absolute_path))
    sub = cfg["subcommand"]
    for field in _REQUIRED_BY_SUBCOMMAND[sub]:
        if field not in cfg:
            raise ConfigError(
                f"subcommand {sub!r} requires field {field!r}", pointer=f"/{field}"
            )
    if sub == "periods-scan" and "eps_grid" not in cfg and "nu_grid" not in cfg:
        raise ConfigError(
            "periods-scan needs eps_grid or nu_grid", pointer="/eps_grid"
        )
    if sub == "decay-scan":
        for i, e in enumerate(cfg["eps_grid"]):
            if not 0.0 <= e <= 0.8:
                raise ConfigError(
                    "decay-scan frequency ratios must lie in [0, 0.8]",
                    pointer=f"/eps_grid/{i}",
                )
        n_terms = cfg["eigenfunction"].get("n_terms", 12)
        if not 8 <= n_terms <= 32:
            raise ConfigError(
                "decay-scan wave sums use 8 to 32 boundary terms",
                pointer="/eigenfunction/n_terms",
            )
    return cfg


def canonical_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    """First 64 bits of the SHA-256 of the canonical JSON, as hex."""
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def load_config(path) -> dict:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", pointer="/") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", pointer="/") from exc
    return validate_config(cfg)
