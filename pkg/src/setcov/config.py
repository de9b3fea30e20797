"""Experiment configuration: JSON loading, schema validation and hashing."""

import copy
import hashlib
import json

import jsonschema

from .errors import ConfigError

SHAPE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["interval", "box", "ball", "polygon", "union"]},
        "dim": {"type": "integer", "minimum": 1, "maximum": 3},
        "a": {"type": "number"}, "b": {"type": "number"},
        "lows": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "highs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "vertices": {"type": "array", "minItems": 3,
                     "items": {"type": "array", "items": {"type": "number"},
                               "minItems": 2, "maxItems": 2}},
        "members": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/shape"}},
    },
    "additionalProperties": False,
}

KERNEL_SCHEMA = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "required": ["table"],
         "properties": {"table": {"type": "string"}, "dim": {"type": "integer"}},
         "additionalProperties": False},
    ]
}

PHI_SCHEMA = {
    "oneOf": [
        {"type": "string"},
        {"type": "array", "items": {"type": "number"}},
        {"type": "object", "required": ["coefficients"],
         "properties": {"coefficients": {"type": "object",
                                         "patternProperties": {"^[0-9]+$": {"type": "number"}},
                                         "additionalProperties": False}},
         "additionalProperties": False},
    ]
}

_T_LIST = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
_COMMON = {
    "experiment": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    "budget_seconds": {"type": "number", "exclusiveMinimum": 0},
    "description": {"type": "string"},
}


def _schema(required, props):
    p = dict(_COMMON)
    p.update(props)
    return {
        "$defs": {"shape": SHAPE_SCHEMA},
        "type": "object",
        "required": ["experiment"] + required,
        "properties": p,
        "additionalProperties": False,
    }


SHAPE = {"$ref": "#/$defs/shape"}

SCHEMAS = {
    "covariogram": _schema(["D", "L", "z"], {
        "D": SHAPE, "L": SHAPE,
        "z": {"type": "array", "minItems": 1,
              "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
        "n": {"type": "integer", "minimum": 1000},
        "profile": {"type": "object", "properties": {
            "n_l": {"type": "integer", "minimum": 16},
            "thetas": {"type": "integer", "minimum": 1}}, "additionalProperties": False},
    }),
    "limitcov": _schema(["kernel", "D", "L", "t"], {
        "kernel": KERNEL_SCHEMA, "phi": PHI_SCHEMA, "dim": {"type": "integer"},
        "D": SHAPE, "L": SHAPE, "t": _T_LIST,
        "alpha": {"type": "number"},
        "riesz_samples": {"type": "integer", "minimum": 10000},
        "fit_range": {"type": "array", "items": {"type": "number"}, "minItems": 2,
                      "maxItems": 2},
    }),
    "wt": _schema(["kernel", "t"], {
        "kernel": KERNEL_SCHEMA, "phi": PHI_SCHEMA, "dim": {"type": "integer"},
        "t": _T_LIST, "n": {"type": "integer", "minimum": 10000},
    }),
    "regvar": _schema(["kernel"], {
        "kernel": KERNEL_SCHEMA, "phi": PHI_SCHEMA, "dim": {"type": "integer"},
        "fit_range": {"type": "array", "items": {"type": "number"}, "minItems": 2,
                      "maxItems": 2},
        "n_fit": {"type": "integer", "minimum": 8},
        "expected_alpha": {"type": "number"},
        "potter": {"type": "object", "properties": {
            "A": {"type": "number"}, "delta": {"type": "number"},
            "t_max": {"type": "number"}, "l_min": {"type": "number"},
            "l_max": {"type": "number"}}, "additionalProperties": False},
        "coregvar": {"type": "object", "properties": {
            "H": {"type": "number"}, "t": _T_LIST}, "additionalProperties": False},
    }),
    "berry-rates": _schema(["t"], {
        "t": _T_LIST,
        "q": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 8}},
    }),
    "clt": _schema(["field", "phi", "sets", "t", "n_paths"], {
        "field": {"enum": ["fgn", "berry"]},
        "H": {"type": "number"},
        "phi": PHI_SCHEMA,
        "sets": {"type": "array", "items": SHAPE, "minItems": 1},
        "t": {"type": "number", "exclusiveMinimum": 0},
        "n_paths": {"type": "integer", "minimum": 1},
        "n_waves": {"type": "integer", "minimum": 64},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
    }),
    "reduction": _schema(["phi", "D", "t", "n_paths"], {
        "phi": PHI_SCHEMA, "D": SHAPE, "t": _T_LIST,
        "n_paths": {"type": "integer", "minimum": 1},
        "n_waves": {"type": "integer", "minimum": 64},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
    }),
}

# experiment names accepted in configs, mapped to CLI subcommands
ALIASES = {"limit_convergence": "limitcov", "berry_rates": "berry-rates",
           "regvar_suite": "regvar", "clt_diagnostics": "clt",
           "reduction_check": "reduction"}


def canonical_json(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg):
    """First 16 hex digits of the SHA-256 of the canonical serialisation."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()[:16]


def validate(cfg, kind=None):
    """Validate ``cfg`` against the schema of its experiment kind; returns the kind."""
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    name = cfg.get("experiment", kind)
    name = ALIASES.get(name, name)
    if kind is not None and name != kind:
        raise ConfigError(f"config is for experiment {name!r}, not {kind!r}")
    if name not in SCHEMAS:
        raise ConfigError(f"unknown experiment kind {name!r}")
    try:
        jsonschema.validate(cfg, SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    return name


def load_config(path, kind=None, seed=None):
    """Read, optionally override the seed, and validate a config file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    cfg = copy.deepcopy(cfg)
    if kind is not None and "experiment" not in cfg:
        cfg["experiment"] = kind
    if seed is not None:
        cfg["seed"] = int(seed)
    validate(cfg, kind)
    return cfg
