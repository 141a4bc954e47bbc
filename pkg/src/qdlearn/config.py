"""Experiment configuration: strict JSON schemas and canonical hashing.

Configs are plain JSON objects checked against a declared schema: unknown
keys are rejected with their dotted path, missing keys without defaults are
errors, and every leaf carries a type plus optional choice/range limits.
Validation returns a fully defaulted dict whose canonical hash is embedded
in every output file, so outputs can always be traced to an exact config.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

_MISSING = object()


class ConfigError(ValueError):
    """Schema violation; the message names the offending key path."""


@dataclass(frozen=True)
class Leaf:
    """One scalar config entry."""

    types: tuple
    default: object = _MISSING
    choices: tuple | None = None
    minimum: float | None = None
    allow_none: bool = False


def _check_leaf(value, leaf: Leaf, path: str):
    if value is None:
        if leaf.allow_none:
            return None
        raise ConfigError(f"{path}: null is not allowed")
    # bool passes isinstance checks against int; keep the kinds separate
    if isinstance(value, bool) and bool not in leaf.types:
        raise ConfigError(f"{path}: expected {_type_names(leaf.types)}, got a boolean")
    if not isinstance(value, leaf.types):
        raise ConfigError(
            f"{path}: expected {_type_names(leaf.types)}, got {type(value).__name__}"
        )
    if float in leaf.types and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if leaf.choices is not None and value not in leaf.choices:
        raise ConfigError(f"{path}: must be one of {list(leaf.choices)}, got {value!r}")
    if leaf.minimum is not None and value < leaf.minimum:
        raise ConfigError(f"{path}: must be >= {leaf.minimum}, got {value}")
    return value


def _type_names(types: tuple) -> str:
    return "/".join(t.__name__ for t in types)


def apply_schema(data, schema: dict, path: str = "") -> dict:
    """Validate ``data`` against ``schema``, filling defaults; raises ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key {path + unknown[0]!r}")
    out = {}
    for name, spec in schema.items():
        full = path + name
        if isinstance(spec, dict):
            nested = data.get(name, {})
            out[name] = apply_schema(nested, spec, full + ".")
        elif isinstance(spec, ListOf):
            if name not in data:
                out[name] = list(spec.default)
            else:
                value = data[name]
                if not isinstance(value, list):
                    raise ConfigError(f"{full}: expected a list")
                out[name] = [
                    _check_leaf(v, spec.element, f"{full}[{i}]") for i, v in enumerate(value)
                ]
        else:
            if name not in data:
                if spec.default is _MISSING:
                    raise ConfigError(f"missing required key {full!r}")
                out[name] = spec.default
            else:
                out[name] = _check_leaf(data[name], spec, full)
    return out


@dataclass(frozen=True)
class ListOf:
    element: Leaf
    default: tuple = ()


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def canonical_hash(obj) -> str:
    """sha256 over a canonical JSON encoding; key order never matters."""
    encoded = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(encoded.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

_NOISE_SCHEMA = {
    "kind": Leaf((str,), default="none", choices=("none", "uniform", "gaussian", "cauchy")),
    "strength": Leaf((float, int), default=0.0, minimum=0.0),
}

_LOOP_SCHEMA = {
    "population_size": Leaf((int,), default=128, minimum=1),
    "batch_size": Leaf((int,), default=32, minimum=1),
    "generations": Leaf((int,), default=256, minimum=1),
    "mutation_sigma": Leaf((float, int), default=0.05, minimum=0.0),
}

_TASK_SCHEMA = {
    "kind": Leaf((str,), default="bbob", choices=("bbob", "arm")),
    "function": Leaf((str,), default="sphere"),
    "dim": Leaf((int,), default=2, minimum=1),
    "noise": _NOISE_SCHEMA,
    # fixed across replications; null derives it from the master seed
    "instance_seed": Leaf((int,), default=None, allow_none=True),
}

_DESCRIPTOR_SCHEMA = {
    "kind": Leaf(
        (str,), default="projection", choices=("projection", "random_noise", "task_specific")
    ),
    "dim": Leaf((int,), default=2, minimum=1),
    # descriptor-space box, used only to build MAP-Elites centroids
    "bounds_low": Leaf((float, int), default=-5.0),
    "bounds_high": Leaf((float, int), default=5.0),
}

_ALGORITHM_SCHEMA = {
    "kind": Leaf(
        (str,),
        default="identity",
        choices=("identity", "random", "map_elites", "novelty", "dominated_novelty", "learned"),
    ),
    "k": Leaf((int,), default=3, minimum=1),
    "cells": Leaf((int,), default=128, minimum=1),
    "theta_path": Leaf((str,), default=None, allow_none=True),
}

RUN_SCHEMA = {
    "task": _TASK_SCHEMA,
    "algorithm": _ALGORITHM_SCHEMA,
    "descriptor": _DESCRIPTOR_SCHEMA,
    "loop": _LOOP_SCHEMA,
    "metric_k": Leaf((int,), default=3, minimum=1),
    "replications": Leaf((int,), default=1, minimum=1),
    "seed": Leaf((int,), default=0),
    "save_population": Leaf((bool,), default=False),
    "output_dir": Leaf((str,)),
}

_NET_SCHEMA = {
    "descriptor_dim": Leaf((int,), default=2, minimum=1),
    "layers": Leaf((int,), default=4, minimum=1),
    "features": Leaf((int,), default=16, minimum=1),
    "heads": Leaf((int,), default=4, minimum=1),
    "mlp_hidden": Leaf((int,), default=16, minimum=1),
}

_META_TASKS_SCHEMA = {
    "dim_low": Leaf((int,), default=2, minimum=1),
    "dim_high": Leaf((int,), default=12, minimum=1),
    "descriptor_dim": Leaf((int,), default=2, minimum=1),
    "noise_kinds": ListOf(
        Leaf((str,), choices=("none", "uniform", "gaussian", "cauchy")), default=("none",)
    ),
    "noise_strength_low": Leaf((float, int), default=0.0, minimum=0.0),
    "noise_strength_high": Leaf((float, int), default=0.0, minimum=0.0),
    "population_size": Leaf((int,), default=128, minimum=1),
    "batch_size": Leaf((int,), default=32, minimum=1),
    "generations": Leaf((int,), default=256, minimum=1),
    "mutation_sigma": Leaf((float, int), default=0.05, minimum=0.0),
}

META_SCHEMA = {
    "objective": {
        "kind": Leaf((str,), default="F", choices=("F", "N", "FplusN")),
        "k": Leaf((int,), default=3, minimum=1),
    },
    "net": _NET_SCHEMA,
    "tasks": _META_TASKS_SCHEMA,
    "meta_population": Leaf((int,), default=256, minimum=2),
    "tasks_per_generation": Leaf((int,), default=256, minimum=1),
    "meta_generations": Leaf((int,), default=16384, minimum=1),
    "sigma0": Leaf((float, int), default=0.1),
    "seed": Leaf((int,), default=0),
    "aggregation": Leaf((str,), default="final", choices=("final", "mean")),
    "normalization": Leaf((str,), default="zscore", choices=("zscore", "rank")),
    "validation_tasks": Leaf((int,), default=32, minimum=1),
    "validate_every": Leaf((int,), default=50, minimum=1),
    "checkpoint_every": Leaf((int,), default=50, minimum=1),
    "output_dir": Leaf((str,)),
}

ABLATION_SCHEMA = {
    "task": _TASK_SCHEMA,
    "loop": _LOOP_SCHEMA,
    # descriptor kind is fixed per arm; only the shared shape is configurable
    "descriptor": {
        "dim": Leaf((int,), default=2, minimum=1),
        "bounds_low": Leaf((float, int), default=-5.0),
        "bounds_high": Leaf((float, int), default=5.0),
    },
    "theta_path": Leaf((str,)),
    "metric_k": Leaf((int,), default=3, minimum=1),
    "replications": Leaf((int,), default=1, minimum=1),
    "seed": Leaf((int,), default=0),
    "output_dir": Leaf((str,)),
}


def load_run_config(path) -> dict:
    return apply_schema(load_json(path), RUN_SCHEMA)


def load_meta_config(path) -> dict:
    return apply_schema(load_json(path), META_SCHEMA)


def load_ablation_config(path) -> dict:
    return apply_schema(load_json(path), ABLATION_SCHEMA)
